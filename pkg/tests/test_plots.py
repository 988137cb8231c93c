"""Smoke tests for figure rendering (headless backend)."""

from privesc_rl.a2c import Metrics
from privesc_rl.bench import evaluate
from privesc_rl.plots import plot_eval_report, plot_learning_curve, read_metrics_csv


def test_learning_curve_png(tmp_path):
    m = Metrics(window=3)
    for i in range(1, 31):
        m.push(i, 40 - i, 1.0 if i % 2 else 0.0)
    csv_path = tmp_path / "metrics.csv"
    m.write_csv(csv_path)

    data = read_metrics_csv(csv_path)
    assert data["episode"][0] == 1.0
    assert len(data["length"]) == 30

    out = plot_learning_curve(csv_path, tmp_path / "curve.png")
    assert out.exists()
    assert out.stat().st_size > 1000  # a real PNG, not an empty file


def test_eval_report_png(tmp_path):
    report = evaluate("oracle", n_per_vuln=2, seed=0, keep_episodes=False)
    out = plot_eval_report(report, tmp_path / "report.png")
    assert out.exists()
    assert out.stat().st_size > 1000
