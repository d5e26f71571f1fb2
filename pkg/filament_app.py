"""
러프 필라멘트 시뮬레이터 - 메인 애플리케이션
validate: 불변량 검사 배터리
energy:   곡선 에너지 (세 가지 방법) 와 속도 상계
evolve:   필라멘트 시간 적분과 보존/포락선 진단
sweep:    매개변수 조합별 실행

종료 코드: 0 모든 검사 통과, 2 설정 오류, 3 수치 오류 또는 실패한 검사
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from dotenv import load_dotenv

# 환경 변수를 가장 먼저 로드
load_dotenv()

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from models.app_config import SimulationConfig
from models.errors import ConfigError, FilamentError
from models.scenario import Scenario, PIPELINES
from parsers.scenario_parser import ScenarioParser, apply_overrides
from services.scenario_service import ScenarioService, EXIT_CONFIG, EXIT_FAILED

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filament_app",
        description="Rough vortex filament simulator: validation, energy, evolution and sweeps.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)
    for verb in PIPELINES:
        sub = verbs.add_parser(verb, help=f"run the {verb} pipeline")
        sub.add_argument("--config", help="scenario file (sectioned key = value)")
        sub.add_argument("--output-dir", help="root directory for run directories")
        sub.add_argument("--seed", type=int, help="override curve.seed")
        sub.add_argument("--workers", type=int, help="process pool size for sweeps")
        sub.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
        if verb == 'validate':
            sub.add_argument("--inject-area-perturbation", action="store_true",
                             help="perturb one area entry so the Chen check must fail")
    return parser


def load_scenario(args: argparse.Namespace, config: SimulationConfig) -> Scenario:
    """
    시나리오 파일 (또는 기본 시나리오) 에 명령행 재정의를 적용합니다.

    Raises:
        ConfigError: 시나리오가 잘못되었을 때
    """
    if args.config:
        scenario = ScenarioParser().parse_file(args.config)
        if scenario.pipeline != args.verb:
            logger.info(f"시나리오 pipeline '{scenario.pipeline}' 대신 명령 '{args.verb}' 실행")
    else:
        scenario = Scenario(name=args.verb, pipeline=args.verb, output_dir=config.output_dir)

    overrides = {'pipeline': args.verb}
    if args.seed is not None:
        overrides['curve.seed'] = args.seed
    if args.output_dir:
        overrides['output_dir'] = args.output_dir
    if getattr(args, 'inject_area_perturbation', False):
        overrides['inject_area_perturbation'] = True
    return apply_overrides(scenario, overrides)


def load_config(args: argparse.Namespace) -> SimulationConfig:
    config = SimulationConfig.from_env()
    overrides = {}
    if args.workers is not None:
        overrides['workers'] = args.workers
    if args.log_level:
        overrides['log_level'] = args.log_level.upper()
    if args.output_dir:
        overrides['output_dir'] = args.output_dir
    return replace(config, **overrides) if overrides else config


def main(argv: Optional[List[str]] = None) -> int:
    """메인 애플리케이션 실행"""
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args)
    except ConfigError as e:
        print(f"configuration error: {str(e)}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(level=getattr(logging, config.log_level, logging.INFO), format=LOG_FORMAT)

    try:
        scenario = load_scenario(args, config)
        outcome = ScenarioService(config).run(scenario)
    except ConfigError as e:
        print(f"configuration error: {str(e)}", file=sys.stderr)
        return EXIT_CONFIG
    except FilamentError as e:
        print(f"check '{e.check}' failed: {str(e)}", file=sys.stderr)
        return EXIT_FAILED

    if outcome.report is not None and scenario.pipeline == 'validate':
        print(outcome.report.format_table())

    if outcome.exit_code == EXIT_CONFIG:
        print(f"configuration error: {outcome.summary['error']['message']}", file=sys.stderr)
    elif not outcome.passed:
        print(f"failed checks: {', '.join(outcome.summary['failed'])}", file=sys.stderr)
    print(f"summary: {outcome.run_dir}")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
