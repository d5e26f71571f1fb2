"""
곡선 스냅샷 핸들러 모듈
격자 곡선을 줄 단위 텍스트 파일로 쓰고 읽습니다.

형식:
    # rough-filament curve snapshot
    # n_points = 128
    # nu = 0.9
    # seed = 0
    # scale = 1.0
    # t = 0.0
    index xi x y z
    0 0.0 1.0 0.0 0.0
    ...

숫자는 repr 로 기록하므로 로케일과 무관하고 읽은 값이 쓴 값과 비트 단위로 같습니다.
"""

import logging
import os
from typing import Dict, Any, Optional, Tuple

import numpy as np

import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.circle_grid import CircleGrid
from models.errors import ConfigError

logger = logging.getLogger(__name__)

MAGIC = "# rough-filament curve snapshot"
COLUMNS = "index xi x y z"
HEADER_KEYS = ('n_points', 'nu', 'seed', 'scale', 't')


def _number(value: float) -> str:
    return repr(float(value))


class SnapshotHandler:
    """곡선 스냅샷 파일 읽기/쓰기 핸들러 클래스"""

    def __init__(self, directory: str = "."):
        """
        SnapshotHandler 초기화

        Args:
            directory: 스냅샷을 쓸 디렉터리
        """
        self.directory = directory

    def snapshot_path(self, index: int) -> str:
        return os.path.join(self.directory, f"snapshot_{index:05d}.txt")

    def write(self, path: str, samples: np.ndarray, nu: float, seed: int = 0,
              scale: float = 1.0, t: float = 0.0) -> str:
        """
        곡선 스냅샷을 씁니다.

        Args:
            path: 파일 경로
            samples: (N, 3) 곡선 노드
            nu: Hölder 지수
            seed: 생성 시드
            scale: 곡선 크기
            t: 시각

        Returns:
            str: 쓴 파일 경로
        """
        samples = np.asarray(samples, dtype=float)
        grid = CircleGrid(len(samples))
        lines = [
            MAGIC,
            f"# n_points = {grid.n_points}",
            f"# nu = {_number(nu)}",
            f"# seed = {int(seed)}",
            f"# scale = {_number(scale)}",
            f"# t = {_number(t)}",
            COLUMNS,
        ]
        for i, (xi, point) in enumerate(zip(grid.nodes, samples)):
            lines.append(" ".join([str(i), _number(xi)] + [_number(v) for v in point]))

        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write("\n".join(lines) + "\n")
        logger.debug(f"스냅샷 저장: {path} (N={grid.n_points}, t={t})")
        return path

    def write_snapshot(self, index: int, samples: np.ndarray, nu: float, seed: int = 0,
                       scale: float = 1.0, t: float = 0.0) -> str:
        """실행 디렉터리 안 번호 붙은 스냅샷"""
        return self.write(self.snapshot_path(index), samples, nu, seed, scale, t)

    def read(self, path: str) -> Tuple[np.ndarray, Dict[str, Any]]:
        """
        스냅샷을 읽습니다.

        Returns:
            (곡선 노드 (N, 3), 헤더 사전)

        Raises:
            ConfigError: 파일이 없거나 형식이 잘못된 경우
        """
        if not os.path.isfile(path):
            raise ConfigError(f"snapshot file not found: {path}")

        with open(path, 'r', encoding='utf-8') as f:
            lines = [line.strip() for line in f if line.strip()]

        if not lines or lines[0] != MAGIC:
            raise ConfigError(f"{path}: not a curve snapshot (missing '{MAGIC}')")

        header: Dict[str, Any] = {}
        body_start = None
        for number, line in enumerate(lines[1:], start=1):
            if line == COLUMNS:
                body_start = number + 1
                break
            key, sep, value = line.lstrip('#').partition('=')
            if not sep:
                raise ConfigError(f"{path}:{number + 1}: malformed header line '{line}'")
            header[key.strip()] = value.strip()

        missing = [key for key in HEADER_KEYS if key not in header]
        if body_start is None or missing:
            raise ConfigError(f"{path}: incomplete header, missing {missing or ['column line']}")

        try:
            parsed = {
                'n_points': int(header['n_points']),
                'nu': float(header['nu']),
                'seed': int(header['seed']),
                'scale': float(header['scale']),
                't': float(header['t']),
            }
            rows = np.array([[float(v) for v in line.split()] for line in lines[body_start:]])
        except ValueError as e:
            raise ConfigError(f"{path}: invalid number: {str(e)}")

        n = parsed['n_points']
        if rows.shape != (n, 5):
            raise ConfigError(f"{path}: expected {n} records of 5 fields, got shape {rows.shape}")
        if not np.array_equal(rows[:, 0], np.arange(n)):
            raise ConfigError(f"{path}: node indices must run 0..{n - 1}")
        if not np.all(np.isfinite(rows[:, 2:])):
            raise ConfigError(f"{path}: non-finite coordinates")

        logger.info(f"스냅샷 로드: {path} (N={n}, ν={parsed['nu']})")
        return rows[:, 2:].copy(), parsed


def load_curve(path: str, handler: Optional[SnapshotHandler] = None) -> Tuple[np.ndarray, Dict[str, Any]]:
    """스냅샷 파일의 곡선과 헤더"""
    return (handler or SnapshotHandler()).read(path)
