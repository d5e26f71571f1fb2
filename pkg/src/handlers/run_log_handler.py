"""
실행 로그 핸들러 모듈
실행 디렉터리에 줄 단위 JSON 실행 로그와 summary.json 을 기록합니다.
"""

import json
import logging
import math
import os
from typing import Dict, Any, List

import numpy as np

logger = logging.getLogger(__name__)

RUN_LOG_NAME = "run_log.jsonl"
SUMMARY_NAME = "summary.json"


def to_plain(value: Any) -> Any:
    """JSON 으로 쓸 수 있는 값으로 변환 (numpy 값, 비유한 수는 문자열)"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def dump_json(data: Dict[str, Any], indent: int = 2) -> str:
    """정렬된 키로 직렬화 (같은 입력이면 같은 바이트)"""
    return json.dumps(to_plain(data), ensure_ascii=False, indent=indent, sort_keys=True)


class RunLogHandler:
    """실행 로그 기록 핸들러 클래스"""

    def __init__(self, run_dir: str):
        """
        RunLogHandler 초기화

        Args:
            run_dir: 실행 디렉터리 (없으면 생성)
        """
        self.run_dir = run_dir
        os.makedirs(run_dir, exist_ok=True)
        self.log_path = os.path.join(run_dir, RUN_LOG_NAME)
        self.summary_path = os.path.join(run_dir, SUMMARY_NAME)
        # 같은 디렉터리 재실행 시 이전 로그를 덮어씀
        with open(self.log_path, 'w', encoding='utf-8'):
            pass
        self.records_written = 0

    def append(self, record: Dict[str, Any]):
        """레코드 한 줄 추가"""
        line = json.dumps(to_plain(record), ensure_ascii=False, sort_keys=True)
        with open(self.log_path, 'a', encoding='utf-8') as f:
            f.write(line + "\n")
        self.records_written += 1

    def append_many(self, records: List[Dict[str, Any]]):
        for record in records:
            self.append(record)

    def write_summary(self, summary: Dict[str, Any]) -> str:
        """
        summary.json 저장

        Returns:
            str: 저장한 파일 경로
        """
        with open(self.summary_path, 'w', encoding='utf-8') as f:
            f.write(dump_json(summary) + "\n")
        logger.info(f"요약 저장: {self.summary_path} (실행 로그 {self.records_written}줄)")
        return self.summary_path

    def read_records(self) -> List[Dict[str, Any]]:
        """실행 로그 레코드 목록"""
        with open(self.log_path, 'r', encoding='utf-8') as f:
            return [json.loads(line) for line in f if line.strip()]
