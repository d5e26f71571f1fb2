"""
시나리오 파일 파서 모듈
섹션이 있는 key = value 텍스트 파일을 Scenario 객체로 변환합니다.

예:
    name = circle_energy
    pipeline = energy

    [curve]
    kind = circle
    n_points = 128

    [kernel]
    gamma_strength = 1.0
    mu = 1.0

    [checks]
    energy_agreement = true

    [sweep]
    pipeline = energy
    kernel.mu = 0.5, 1.0, 2.0
"""

import logging
import os
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.errors import ConfigError
from models.kernel_spec import KernelSpec
from models.scenario import Scenario, CurveBlock, RunBlock

logger = logging.getLogger(__name__)

TRUE_WORDS = ('true', 'yes', 'on', '1')
FALSE_WORDS = ('false', 'no', 'off', '0')


def parse_bool(raw: str) -> bool:
    word = raw.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"expected true or false, got '{raw}'")


def _optional_float(raw: str) -> Optional[float]:
    return None if not raw.strip() else float(raw)


# 섹션 -> 키 -> (Scenario 내 위치, 변환 함수)
FIELDS: Dict[str, Dict[str, Tuple[str, Callable[[str], Any]]]] = {
    '': {
        'name': ('name', str),
        'pipeline': ('pipeline', str),
    },
    'curve': {
        'kind': ('curve.kind', str),
        'n_points': ('curve.n_points', int),
        'nu': ('curve.nu', _optional_float),
        'seed': ('curve.seed', int),
        'scale': ('curve.scale', float),
        'path': ('curve.path', str),
    },
    'kernel': {
        'gamma_strength': ('kernel.gamma_strength', float),
        'mu': ('kernel.mu', float),
        'max_order': ('kernel.max_order', int),
        'resolution': ('kernel_resolution', int),
    },
    'run': {
        't_final': ('run.t_final', float),
        'dt': ('run.dt', float),
        'scheme': ('run.scheme', str),
        'diagnostics_every': ('run.diagnostics_every', int),
        'snapshot_every': ('run.snapshot_every', int),
    },
    'output': {
        'dir': ('output_dir', str),
        'inject_area_perturbation': ('inject_area_perturbation', parse_bool),
    },
}
SECTIONS = tuple(name for name in FIELDS if name) + ('checks', 'sweep')


def coerce(section: str, key: str, raw: str) -> Tuple[str, Any]:
    """섹션 키의 문자열 값을 (위치, 값) 으로 변환"""
    known = FIELDS.get(section, {})
    if key not in known:
        where = f"[{section}]" if section else "top level"
        raise ConfigError(f"unknown key '{key}' in {where}")
    target, cast = known[key]
    try:
        return target, cast(raw)
    except ValueError as e:
        raise ConfigError(f"{section + '.' if section else ''}{key}: invalid value '{raw}' ({str(e)})")


def apply_overrides(scenario: Scenario, overrides: Dict[str, Any]) -> Scenario:
    """
    위치 (예: 'curve.n_points', 'kernel.mu', 'output_dir') 별 값으로 새 Scenario 를 만듭니다.
    하위 블록은 dataclasses.replace 로 다시 만들어 검증을 다시 거칩니다.

    Raises:
        ConfigError: 값이 범위를 벗어나거나 위치를 모를 때
    """
    blocks: Dict[str, Dict[str, Any]] = {'curve': {}, 'kernel': {}, 'run': {}, '': {}}
    for target, value in overrides.items():
        block, _, name = target.rpartition('.')
        if block not in blocks:
            raise ConfigError(f"unknown parameter '{target}'")
        blocks[block][name] = value
    try:
        curve = replace(scenario.curve, **blocks['curve']) if blocks['curve'] else scenario.curve
        kernel = replace(scenario.kernel, **blocks['kernel']) if blocks['kernel'] else scenario.kernel
        run = replace(scenario.run, **blocks['run']) if blocks['run'] else scenario.run
        return replace(scenario, curve=curve, kernel=kernel, run=run, **blocks[''])
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


class ScenarioParser:
    """시나리오 파일 파싱 클래스"""

    def parse_file(self, path: str) -> Scenario:
        """
        시나리오 파일을 읽어 Scenario 로 변환합니다.

        Args:
            path: 시나리오 파일 경로

        Returns:
            Scenario: 검증된 시나리오

        Raises:
            ConfigError: 파일이 없거나, 형식 또는 값이 잘못된 경우
        """
        if not os.path.isfile(path):
            raise ConfigError(f"scenario file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
        scenario = self.parse_text(text, source=path)

        # 스냅샷 경로는 시나리오 파일 기준
        if scenario.curve.kind == 'file' and not os.path.isabs(scenario.curve.path):
            resolved = os.path.join(os.path.dirname(os.path.abspath(path)), scenario.curve.path)
            scenario = apply_overrides(scenario, {'curve.path': resolved})
        logger.info(f"시나리오 로드: {path} (pipeline={scenario.pipeline}, curve={scenario.curve.kind})")
        return scenario

    def parse_text(self, text: str, source: str = "<text>") -> Scenario:
        """
        시나리오 텍스트를 Scenario 로 변환합니다.

        Raises:
            ConfigError: 형식 또는 값이 잘못된 경우 (줄 번호 포함)
        """
        sections = self.split_sections(text, source)

        overrides: Dict[str, Any] = {}
        for section in ('', 'curve', 'kernel', 'run', 'output'):
            for key, (line_no, raw) in sections.get(section, {}).items():
                try:
                    target, value = coerce(section, key, raw)
                except ConfigError as e:
                    raise ConfigError(f"{source}:{line_no}: {str(e)}")
                overrides[target] = value

        checks = self._checks(sections.get('checks', {}), source)
        sweep, sweep_pipeline = self._sweep(sections.get('sweep', {}), source)

        curve_fields = {k.split('.', 1)[1]: v for k, v in overrides.items() if k.startswith('curve.')}
        kernel_fields = {k.split('.', 1)[1]: v for k, v in overrides.items() if k.startswith('kernel.')}
        run_fields = {k.split('.', 1)[1]: v for k, v in overrides.items() if k.startswith('run.')}
        top = {k: v for k, v in overrides.items() if '.' not in k}

        try:
            return Scenario(
                curve=CurveBlock(**curve_fields),
                kernel=KernelSpec(**kernel_fields),
                run=RunBlock(**run_fields),
                checks=checks,
                sweep=sweep,
                sweep_pipeline=sweep_pipeline,
                **top,
            )
        except ConfigError as e:
            raise ConfigError(f"{source}: {str(e)}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{source}: {str(e)}")

    def split_sections(self, text: str, source: str = "<text>") -> Dict[str, Dict[str, Tuple[int, str]]]:
        """섹션 -> 키 -> (줄 번호, 원문 값); 최상위 키는 섹션 ''"""
        sections: Dict[str, Dict[str, Tuple[int, str]]] = {'': {}}
        current = ''
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.split('#', 1)[0].strip()
            if not stripped:
                continue
            if stripped.startswith('[') and stripped.endswith(']'):
                current = stripped[1:-1].strip().lower()
                if current not in SECTIONS:
                    raise ConfigError(f"{source}:{line_no}: unknown section [{current}]")
                sections.setdefault(current, {})
                continue
            key, sep, value = stripped.partition('=')
            if not sep or not key.strip():
                raise ConfigError(f"{source}:{line_no}: expected 'key = value', got '{line.strip()}'")
            key = key.strip()
            if key in sections[current]:
                raise ConfigError(f"{source}:{line_no}: duplicate key '{key}'")
            sections[current][key] = (line_no, value.strip())
        return sections

    @staticmethod
    def _checks(entries: Dict[str, Tuple[int, str]], source: str) -> List[str]:
        enabled = []
        for name, (line_no, raw) in entries.items():
            try:
                if parse_bool(raw):
                    enabled.append(name)
            except ValueError as e:
                raise ConfigError(f"{source}:{line_no}: checks.{name}: {str(e)}")
        if entries and not enabled:
            raise ConfigError(f"{source}: [checks] disables every check")
        return enabled

    @staticmethod
    def _sweep(entries: Dict[str, Tuple[int, str]], source: str) -> Tuple[Dict[str, List[Any]], str]:
        sweep: Dict[str, List[Any]] = {}
        pipeline = 'energy'
        for name, (line_no, raw) in entries.items():
            if name == 'pipeline':
                pipeline = raw
                continue
            section, _, key = name.rpartition('.')
            values = [v.strip() for v in raw.split(',') if v.strip()]
            if not values:
                raise ConfigError(f"{source}:{line_no}: sweep parameter '{name}' has no values")
            try:
                typed = [coerce(section, key, v) for v in values]
            except ConfigError as e:
                raise ConfigError(f"{source}:{line_no}: sweep {str(e)}")
            sweep[typed[0][0]] = [value for _, value in typed]
        return sweep, pipeline
