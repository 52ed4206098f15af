"""Helper scripts run against real CLI output"""

import runpy
import sys
from pathlib import Path

from backend.cli import EXIT_OK, main

ROOT = Path(__file__).resolve().parents[2]


def test_check_stats_prints_summary(tmp_path, monkeypatch, capsys):
    gt = tmp_path / 'gt.jsonl'
    gt.write_text('{"image_id": "a", "polygon": [[0, 0], [40, 0], [40, 4], [0, 4]]}\n')
    out = tmp_path / 'stats.json'
    assert main(['stats', '--in', str(gt), '--out', str(out)]) == EXIT_OK
    capsys.readouterr()

    monkeypatch.setattr(sys, 'argv', ['check_stats.py', str(out)])
    runpy.run_path(str(ROOT / 'scripts' / 'utils' / 'check_stats.py'), run_name='__main__')
    printed = capsys.readouterr().out
    assert 'Instances: 1 (0 failed fits)' in printed
    assert 'Straight: 1' in printed
    assert len([line for line in printed.splitlines() if line[:1].isdigit()]) == 16
