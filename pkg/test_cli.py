"""
End-to-end tests of the atomchip command line
"""

import json

import numpy as np
import pandas as pd
import pytest

import atomchip
from atomchip import main


def run(tmp_path, *args):
    return main(['--output-dir', str(tmp_path), *args])


def read_json(path):
    return json.loads(path.read_text())


# ---------------------------------------------------------------- usage

@pytest.mark.parametrize('argv', [['--help'], ['trap', '--help'], ['collide', '--help']])
def test_help_exits_zero(argv, capsys):
    assert main(argv) == 0
    assert 'usage' in capsys.readouterr().out


def test_unknown_flag_exits_one(tmp_path, layouts_dir):
    assert run(tmp_path, 'field', str(layouts_dir / 'crossing_trap.json'), '--bogus') == 1


def test_missing_subcommand_exits_one():
    assert main([]) == 1


def test_missing_layout_exits_one(tmp_path, capsys):
    missing = tmp_path / 'missing.json'
    assert run(tmp_path, 'field', str(missing)) == 1
    err = capsys.readouterr().err.replace('\n', '')
    assert 'missing.json' in err


def test_missing_config_exits_one(tmp_path):
    assert main(['--config', str(tmp_path / 'nope.yaml'), 'optimize']) == 1


def test_unknown_log_level_exits_one(tmp_path, capsys):
    assert run(tmp_path, '--log-level', 'BOGUS', 'limits') == 1
    assert 'BOGUS' in capsys.readouterr().err


def test_log_level_is_case_insensitive(tmp_path):
    assert run(tmp_path, '--log-level', 'debug', 'limits') == 0


@pytest.mark.parametrize('text', ['logging:\n  level: LOUD\n', 'numerics: [1, 2\n', '- just\n- a list\n'])
def test_bad_config_exits_one(tmp_path, text):
    config = tmp_path / 'config.yaml'
    config.write_text(text)
    assert main(['--config', str(config), '--output-dir', str(tmp_path), 'limits']) == 1


def test_unexpected_failure_exits_three(tmp_path, monkeypatch, capsys):
    def singular(*args, **kwargs):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(atomchip, 'conductor_limits', singular)
    assert run(tmp_path, 'limits') == 3
    assert 'LinAlgError' in capsys.readouterr().err


def test_malformed_layout_exits_one(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"format_version": "1.0", "conductors": [')
    assert run(tmp_path, 'trap', str(bad)) == 1


# ---------------------------------------------------------------- field and profile

def test_field_grid_files(tmp_path, layouts_dir, capsys):
    code = run(tmp_path, 'field', str(layouts_dir / 'crossing_trap.json'),
               '--x', '-20', '20', '5', '--z', '15', '35', '5', '--project', 'z')
    assert code == 0
    assert (tmp_path / 'field.csv').exists()
    assert (tmp_path / 'field.json').exists()
    assert (tmp_path / 'field.meta.json').exists()
    projected = pd.read_csv(tmp_path / 'field_min_z.csv')
    assert len(projected) == 5
    assert np.all(projected['B_min_G'] > 0)
    assert 'singular points: 0' in capsys.readouterr().out


def test_field_is_reproducible(tmp_path, layouts_dir):
    args = ['field', str(layouts_dir / 'crossing_trap.json'), '--x', '-20', '20', '5', '--z', '20', '30', '3']
    assert run(tmp_path / 'a', *args) == 0
    assert run(tmp_path / 'b', *args) == 0
    assert (tmp_path / 'a' / 'field.csv').read_bytes() == (tmp_path / 'b' / 'field.csv').read_bytes()


@pytest.mark.parametrize('args, stem', [
    (['limits', '--current', '3'], 'limits'),
    (['trap', 'crossing_trap.json'], 'trap'),
    (['build', 'crossing', '--bias-y', '160', '--bias-x', '-45'], 'crossing'),
])
def test_data_files_are_reproducible(tmp_path, layouts_dir, args, stem):
    args = [str(layouts_dir / a) if a.endswith('.json') else a for a in args]
    assert run(tmp_path / 'a', *args) == 0
    assert run(tmp_path / 'b', *args) == 0
    first = (tmp_path / 'a' / f'{stem}.json').read_bytes()
    assert first == (tmp_path / 'b' / f'{stem}.json').read_bytes()
    assert b'timestamp' not in first
    assert 'timestamp' in read_json(tmp_path / 'a' / f'{stem}.meta.json')


def test_check_times_go_to_the_sidecar(tmp_path):
    assert run(tmp_path, 'limits', '--current', '1') == 0
    meta = read_json(tmp_path / 'limits.meta.json')
    assert set(meta['check_times']) == {'ELEC-1'}
    assert all('timestamp' not in check for check in read_json(tmp_path / 'limits.json')['checks'])


def test_profile_summary(tmp_path, layouts_dir):
    assert run(tmp_path, 'profile', str(layouts_dir / 'crossing_trap.json')) == 0
    summary = read_json(tmp_path / 'profile.json')
    assert summary['z0_um'] == pytest.approx(25.0, rel=1e-2)
    frame = pd.read_csv(tmp_path / 'profile.csv')
    assert len(frame) == 401


# ---------------------------------------------------------------- build and trap

def test_build_and_characterize_crossing(tmp_path):
    layout = tmp_path / 'crossing.json'
    assert run(tmp_path, 'build', 'crossing', '--bias-y', '160', '--bias-x', '-45', '--out', str(layout)) == 0
    assert (tmp_path / 'crossing.meta.json').exists()
    assert run(tmp_path, 'trap', str(layout)) == 0
    result = read_json(tmp_path / 'trap.json')
    report = result['report']
    assert report['r_min_um'][2] == pytest.approx(24.82, abs=0.1)
    assert 4.6 < report['B_min_G'] < 5.2
    assert not report['saddle']
    assert {check['id'] for check in result['checks']} == {'LAYOUT-1', 'TRAP-1'}


def test_curvature_override(tmp_path, layouts_dir):
    code = run(tmp_path, 'trap', str(layouts_dir / 'crossing_trap.json'),
               '--curvature-override', '8.85e4', '8.25e4', '0.59e4')
    assert code == 0
    report = read_json(tmp_path / 'trap.json')['report']
    assert np.array(report['nu_kHz']) * 1e3 == pytest.approx([378.0, 365.0, 97.0], rel=0.015)


def test_four_wire_field_zero_risk_on_build(tmp_path):
    code = run(tmp_path, 'build', 'four_wire', '--bias-y', '160', '--i2', '-0.6')
    assert code == 2


def test_four_wire_field_zero_risk_on_edited_layout(tmp_path, capsys):
    layout = tmp_path / 'four.json'
    assert run(tmp_path, 'build', 'four_wire', '--bias-y', '160', '--i2', '-0.2', '--out', str(layout)) == 0
    doc = json.loads(layout.read_text())
    for element in doc['conductors'] + doc['infinite_wires']:
        if element['name'] == 'cross2':
            element['current'] = -0.6
    layout.write_text(json.dumps(doc))
    assert run(tmp_path, 'trap', str(layout)) == 2
    assert 'FieldZeroRisk' in capsys.readouterr().err


def test_side_guide_has_no_trap(tmp_path, capsys):
    layout = tmp_path / 'guide.json'
    assert run(tmp_path, 'build', 'side_guide', '--bias-y', '160', '--infinite', '--out', str(layout)) == 0
    assert run(tmp_path, 'trap', str(layout)) == 3
    assert 'ZeroFieldRegion' in capsys.readouterr().err


def test_build_requires_bias(tmp_path):
    assert run(tmp_path, 'build', 'crossing') == 2


# ---------------------------------------------------------------- optimize and limits

def test_optimize_spacing_equals_height(tmp_path):
    assert run(tmp_path, 'optimize') == 0
    summary = read_json(tmp_path / 'optimize.json')
    assert summary['spacing_over_z0'] == pytest.approx(1.0, rel=1e-3)
    assert summary['z0_um'] == pytest.approx(25.0, rel=1e-6)


def test_limits_report(tmp_path):
    assert run(tmp_path, 'limits', '--current', '1') == 0
    summary = read_json(tmp_path / 'limits.json')
    assert summary['R_per_cm'] == pytest.approx(3.143, rel=1e-3)
    assert summary['P_per_cm'] == pytest.approx(3.143, rel=1e-3)
    assert summary['j_max'] == pytest.approx(4.6e6)
    assert summary['ok'] is True
    assert summary['details']['rated_density_A_per_cm2'] == pytest.approx(4.286e6, rel=1e-3)


def test_limits_exceeded(tmp_path):
    assert run(tmp_path, 'limits', '--current', '3.3', '--length-mm', '10') == 0
    summary = read_json(tmp_path / 'limits.json')
    assert summary['ok'] is False
    assert summary['checks'][0]['status'] == 'FAIL'
    assert summary['total_power_W'] == pytest.approx(3.143 * 3.3 ** 2, rel=1e-3)


# ---------------------------------------------------------------- schedule and collide

def test_schedule_layout_needs_schedule(tmp_path, layouts_dir):
    assert run(tmp_path, 'schedule', '--layout', str(layouts_dir / 'collider.json')) == 2


def test_collide_symmetric_scenario(tmp_path):
    assert run(tmp_path, 'collide') == 0
    summary = read_json(tmp_path / 'collide.json')
    assert abs(summary['encounter_x_um']) < 1.0
    assert summary['seed'] == 12345
    meta = read_json(tmp_path / 'collide.meta.json')
    assert meta['seed'] == 12345
    assert len(meta['layout_sha256']) == 64
    assert meta['command'][:2] == ['atomchip.py', '--output-dir']


def test_collide_is_deterministic(tmp_path):
    args = ['--seed', '7', 'collide', '--ensemble', '20', '--temperature-uk', '0.2', '--duration-ms', '60']
    assert main(['--output-dir', str(tmp_path / 'a'), *args]) == 0
    assert main(['--output-dir', str(tmp_path / 'b'), *args]) == 0
    first = (tmp_path / 'a' / 'collide.csv').read_bytes()
    assert first == (tmp_path / 'b' / 'collide.csv').read_bytes()
    assert read_json(tmp_path / 'a' / 'collide.json')['seed'] == 7


def test_collide_step_too_large(tmp_path, capsys):
    assert run(tmp_path, 'collide', '--dt-us', '1000') == 3
    assert 'StepTooLarge' in capsys.readouterr().err


def test_collide_with_bundled_files(tmp_path, layouts_dir):
    code = run(tmp_path, 'collide', '--layout', str(layouts_dir / 'collider.json'),
               '--schedule', str(layouts_dir / 'collider.schedule.json'), '--release-ms', '1',
               '--duration-ms', '5')
    assert code == 0
    frame = pd.read_csv(tmp_path / 'collide.csv')
    assert list(frame.columns) == ['t_ms', 'x_left_um', 'x_right_um']
    assert frame['t_ms'].iloc[-1] == pytest.approx(5.0)
