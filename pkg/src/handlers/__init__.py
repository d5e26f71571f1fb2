"""
핸들러 모듈
곡선 스냅샷과 실행 로그 파일 입출력 클래스들을 제공합니다.
"""

from .snapshot_handler import SnapshotHandler, load_curve
from .run_log_handler import RunLogHandler, dump_json

__all__ = ['SnapshotHandler', 'load_curve', 'RunLogHandler', 'dump_json']
