"""
시나리오 파일, 실행 로그, 명령행 테스트
파서 오류, sweep 값 변환, 종료 코드, summary.json 결정성
"""

import sys
import os
import json

import pytest

# 경로 설정
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

import filament_app
from models.check_result import RunOutcome
from models.errors import ConfigError
from parsers.scenario_parser import ScenarioParser, apply_overrides, parse_bool
from handlers.run_log_handler import RunLogHandler, dump_json
from services.scenario_service import ScenarioService, sweep_members, EXIT_OK, EXIT_CONFIG, EXIT_FAILED
from services.validation_suite import validate_suite

CIRCLE_ENERGY = """
# 원 에너지
name = circle_energy
pipeline = energy

[curve]
kind = circle
n_points = 16

[kernel]
gamma_strength = 1.0
mu = 1.0

[checks]
energy_positivity = true
energy_agreement = false
"""

STILL_RING = """
name = still_ring
pipeline = evolve

[curve]
kind = circle
n_points = 16

[kernel]
gamma_strength = 0.0

[run]
t_final = 0.02
dt = 0.01
snapshot_every = 1
"""

STILL_SWEEP = """
name = still_sweep
pipeline = sweep

[kernel]
gamma_strength = 0.0

[run]
t_final = 0.02
dt = 0.01

[sweep]
pipeline = evolve
curve.n_points = 16, 32
"""


def write_scenario(tmp_path, text, name="scenario.ini"):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def run_app(tmp_path, verb, text, *extra):
    """시나리오 파일을 쓰고 filament_app.main 으로 실행"""
    config = write_scenario(tmp_path, text)
    out = str(tmp_path / "runs")
    code = filament_app.main([verb, "--config", config, "--output-dir", out, "--workers", "1", *extra])
    return code, out


def test_parse_scenario_text():
    scenario = ScenarioParser().parse_text(CIRCLE_ENERGY)
    assert scenario.name == 'circle_energy'
    assert scenario.pipeline == 'energy'
    assert scenario.curve.n_points == 16
    assert scenario.curve.nu == 0.9
    assert scenario.kernel.mu == 1.0
    assert scenario.checks == ['energy_positivity']
    assert scenario.check_enabled('energy_positivity')
    assert not scenario.check_enabled('velocity_bound')


def test_bridge_default_exponent():
    scenario = ScenarioParser().parse_text("[curve]\nkind = brownian_bridge\nn_points = 32\n")
    assert scenario.curve.nu == 0.4


@pytest.mark.parametrize("text,message", [
    ("name = a\ncolour = red\n", "unknown key 'colour'"),
    ("[curve]\nn_points = 16\nn_points = 32\n", "duplicate key 'n_points'"),
    ("[curve]\nnu = 0.2\n", "ν∈(1/3,1)"),
    ("[curve]\nn_points = 24\n", "power of two"),
    ("[physics]\nmu = 1\n", "unknown section"),
    ("[curve]\nkind circle\n", "expected 'key = value'"),
    ("[kernel]\nmu = -1\n", "mu"),
    ("[checks]\nenergy_positivity = maybe\n", "expected true or false"),
])
def test_parser_errors(text, message):
    with pytest.raises(ConfigError) as excinfo:
        ScenarioParser().parse_text(text)
    assert message in str(excinfo.value)


def test_parser_reports_line_numbers():
    with pytest.raises(ConfigError) as excinfo:
        ScenarioParser().parse_text("name = a\n\n[curve]\nn_points = many\n", source="bad.ini")
    assert "bad.ini:4" in str(excinfo.value)


def test_sweep_values_are_typed():
    scenario = ScenarioParser().parse_text(STILL_SWEEP)
    assert scenario.sweep == {'curve.n_points': [16, 32]}
    assert scenario.sweep_pipeline == 'evolve'

    members = sweep_members(apply_overrides(scenario, {'output_dir': 'out'}))
    assert [params for params, _ in members] == [{'curve.n_points': 16}, {'curve.n_points': 32}]
    assert [m.name for _, m in members] == ['run_000', 'run_001']
    assert members[1][1].curve.n_points == 32
    assert members[0][1].output_dir == os.path.join('out', 'still_sweep')


def test_parse_bool_words():
    assert parse_bool("Yes") and parse_bool("on") and parse_bool("1")
    assert not parse_bool("false")
    with pytest.raises(ValueError):
        parse_bool("perhaps")


def test_apply_overrides_revalidates():
    scenario = ScenarioParser().parse_text(CIRCLE_ENERGY)
    changed = apply_overrides(scenario, {'kernel.mu': 0.5, 'curve.seed': 4})
    assert changed.kernel.mu == 0.5 and changed.curve.seed == 4
    assert scenario.kernel.mu == 1.0
    with pytest.raises(ConfigError):
        apply_overrides(scenario, {'curve.nu': 1.0})
    with pytest.raises(ConfigError):
        apply_overrides(scenario, {'solver.tol': 1e-3})


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ConfigError):
        ScenarioParser().parse_file(str(tmp_path / "absent.ini"))


def test_run_log_handler(tmp_path):
    handler = RunLogHandler(str(tmp_path / "run"))
    handler.append({'t': 0.0, 'energy': float('nan')})
    handler.append_many([{'t': 0.5}, {'t': 1.0}])
    records = handler.read_records()
    assert len(records) == 3
    assert records[0]['energy'] == 'nan'

    path = handler.write_summary({'b': 1, 'a': [1.0, 2.0]})
    with open(path, 'r', encoding='utf-8') as f:
        assert json.load(f) == {'a': [1.0, 2.0], 'b': 1}

    # 같은 디렉터리 재실행은 로그를 비움
    assert RunLogHandler(str(tmp_path / "run")).read_records() == []
    assert dump_json({'z': 1, 'a': 2}).index('"a"') < dump_json({'z': 1, 'a': 2}).index('"z"')


def test_cli_rejects_low_exponent(tmp_path):
    code, _ = run_app(tmp_path, "energy", CIRCLE_ENERGY.replace("n_points = 16", "n_points = 16\nnu = 0.2"))
    assert code == EXIT_CONFIG


def test_cli_unknown_check_is_config_error(tmp_path):
    code, out = run_app(tmp_path, "energy", CIRCLE_ENERGY.replace("energy_positivity", "chen_relation"))
    assert code == EXIT_CONFIG
    with open(os.path.join(out, "circle_energy", "summary.json"), 'r', encoding='utf-8') as f:
        summary = json.load(f)
    assert summary['error']['check'] == 'config'
    assert summary['exit_code'] == EXIT_CONFIG


def test_cli_energy_summary_is_deterministic(tmp_path):
    """같은 입력으로 두 번 실행하면 summary.json 이 바이트 단위로 같음"""
    contents = []
    for _ in range(2):
        code, out = run_app(tmp_path, "energy", CIRCLE_ENERGY)
        assert code == EXIT_OK
        with open(os.path.join(out, "circle_energy", "summary.json"), 'rb') as f:
            contents.append(f.read())
    assert contents[0] == contents[1]

    summary = json.loads(contents[0])
    assert summary['passed'] is True
    assert summary['results']['energy']['h_rough'] > 0
    assert [c['name'] for c in summary['checks']] == ['energy_positivity']
    assert 'workers' not in summary['config']
    assert os.path.isfile(os.path.join(out, "circle_energy", "snapshot_00000.txt"))


def test_cli_still_ring_evolution(tmp_path):
    code, out = run_app(tmp_path, "evolve", STILL_RING)
    assert code == EXIT_OK
    run_dir = os.path.join(out, "still_ring")
    with open(os.path.join(run_dir, "summary.json"), 'r', encoding='utf-8') as f:
        summary = json.load(f)
    assert summary['results']['diagnostics']['energy_drift'] == 0.0
    assert summary['results']['snapshots'] == 3
    assert sorted(c['name'] for c in summary['checks']) == ['energy_drift', 'gronwall_envelopes', 'norms_finite']

    with open(os.path.join(run_dir, "run_log.jsonl"), "r", encoding="utf-8") as f:
        assert len(f.read().splitlines()) == 3
    assert os.path.isfile(os.path.join(run_dir, "snapshot_00002.txt"))


def test_cli_sweep_writes_member_summaries(tmp_path):
    code, out = run_app(tmp_path, "sweep", STILL_SWEEP)
    assert code == EXIT_OK
    sweep_dir = os.path.join(out, "still_sweep")
    with open(os.path.join(sweep_dir, "sweep_summary.json"), 'r', encoding='utf-8') as f:
        summary = json.load(f)
    assert summary['passed'] is True
    assert [m['name'] for m in summary['members']] == ['run_000', 'run_001']
    assert summary['members'][1]['params'] == {'curve.n_points': 32}
    for member in ('run_000', 'run_001'):
        assert os.path.isfile(os.path.join(sweep_dir, member, "summary.json"))


def test_cli_injected_area_perturbation_fails(tmp_path, capsys):
    text = "name = chen_only\npipeline = validate\n\n[checks]\nchen_relation = true\n"
    code, _ = run_app(tmp_path, "validate", text, "--inject-area-perturbation")
    assert code == EXIT_FAILED
    captured = capsys.readouterr()
    assert "chen_relation" in captured.out
    assert "seconds" in captured.out
    assert "failed checks: chen_relation" in captured.err


def test_cli_reports_service_exit_code(tmp_path, mocker):
    outcome = RunOutcome(name='circle_energy', run_dir=str(tmp_path), exit_code=EXIT_FAILED,
                         summary={'failed': ['energy_positivity']})
    run = mocker.patch.object(ScenarioService, 'run', return_value=outcome)
    code, _ = run_app(tmp_path, "energy", CIRCLE_ENERGY)
    assert code == EXIT_FAILED
    assert run.call_count == 1


def test_validate_suite_selection():
    report = validate_suite(checks=['chen_relation'], inject_area_perturbation=True)
    assert [c.name for c in report.checks] == ['chen_relation']
    assert report.failed() == ['chen_relation']
    assert "seconds" in report.format_table()
    assert report.checks[0].elapsed >= 0.0
    with pytest.raises(ConfigError):
        validate_suite(checks=['not_a_check'])


@pytest.mark.slow
def test_full_validation_suite():
    report = validate_suite()
    assert report.passed, report.format_table()


@pytest.mark.slow
def test_energy_pipeline_with_all_checks(tmp_path):
    text = CIRCLE_ENERGY.replace("n_points = 16", "n_points = 256").split("[checks]")[0]
    outcome = ScenarioService().run(apply_overrides(ScenarioParser().parse_text(text),
                                                    {'output_dir': str(tmp_path)}))
    assert outcome.passed, outcome.summary['failed']
    assert len(outcome.summary['results']['velocity_bounds']) == 3


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
