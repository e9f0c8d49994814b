import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from robinsim.config import config_from_values, load_config, parse_config_text
from robinsim.mapping import MappingScheme
from robinsim.reliability import normalized_increase
from robinsim.report import (
    ConfigError,
    ExperimentConfig,
    emit_csv,
    emit_svg,
    format_sig,
    run_experiment,
)
from robinsim.trace import WriteRecord, codeword_stats, old_new_pairs, save_trace
from robinsim.workloads import WorkloadSpec, gen_workload


def small_config(**overrides):
    base = dict(
        workload=WorkloadSpec(kind="narrowint32", records=300, addresses=8),
        pw=0.999,
        seed=5,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_validation_requires_one_input_source():
    with pytest.raises(ConfigError):
        ExperimentConfig(pw=0.9).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(
            trace_path="x.jsonl",
            workload=WorkloadSpec(kind="irregular", records=1),
            pw=0.9,
        ).validate()


def test_validation_requires_one_pw_source():
    from robinsim.reliability import DeviceParams

    with pytest.raises(ConfigError):
        small_config(pw=None).validate()
    device = DeviceParams(t_write=2.0, i_write=1.5, i_c0=1.0, polarization=0.5,
                          magnetic_moment=0.75, mu_b=1.25, delta=4.0, e_charge=2.0)
    with pytest.raises(ConfigError):
        small_config(device=device).validate()
    cfg = small_config(pw=None, device=device)
    cfg.validate()
    assert 0 < cfg.resolve_pw() < 1


def test_validation_schemes():
    with pytest.raises(ConfigError):
        small_config(schemes=()).validate()
    with pytest.raises(ConfigError):
        small_config(schemes=("per-word", "per-word")).validate()
    with pytest.raises(ConfigError):
        small_config(schemes=("diagonal",)).validate()


def test_identical_write_trace_reports_zero_rates(tmp_path):
    data = bytes(range(64))
    path = tmp_path / "same.jsonl"
    save_trace(path, [WriteRecord(0, data)] * 5)
    # warmup=1 so every analyzed write overwrites identical content
    cfg = ExperimentConfig(trace_path=str(path), pw=0.999, warmup=1)
    bundle = run_experiment(cfg)
    assert bundle.writes == 4
    assert not bundle.histogram.any()
    for report in bundle.schemes:
        assert report.analytic_rate == 0.0
        assert report.optimal_rate == 0.0
        assert report.increase_pct is None  # absent when the optimal rate is zero
        assert normalized_increase(report.analytic_rate, report.optimal_rate) == 0.0


def test_empty_input_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(ConfigError, match="no write records"):
        run_experiment(ExperimentConfig(trace_path=str(path), pw=0.999))


def test_run_experiment_matches_streaming_oracles():
    """The batched engine must agree with the one-pair-at-a-time reference path."""
    from robinsim.mapping import transition_vector
    from robinsim.reliability import trace_error_rate

    cfg = small_config(include_ecc=True)
    bundle = run_experiment(cfg)
    pairs = list(old_new_pairs(gen_workload(cfg.workload, cfg.seed)))
    for report in bundle.schemes:
        scheme = MappingScheme(report.scheme)
        tvs = [transition_vector(scheme, o, n, include_ecc=True) for o, n in pairs]
        reference = trace_error_rate(tvs, cfg.pw)
        assert report.analytic_rate == pytest.approx(reference.rate, rel=1e-9)
        assert report.optimal_rate == pytest.approx(reference.optimal_rate, rel=1e-9)
        assert report.optimal_rate_int == pytest.approx(reference.optimal_rate_int, rel=1e-9)
        assert report.increase_pct == pytest.approx(
            normalized_increase(reference.rate, reference.optimal_rate), rel=1e-9
        )
        stats = codeword_stats(pairs, scheme)
        assert report.stats.min_avg_pct == pytest.approx(stats.min_avg_pct, rel=1e-9)
        assert report.stats.max_avg_pct == pytest.approx(stats.max_avg_pct, rel=1e-9)


def test_run_experiment_monte_carlo_within_three_sigma():
    cfg = small_config(
        workload=WorkloadSpec(kind="narrowint32", records=40, addresses=4),
        monte_carlo=True,
        trials=20_000,
    )
    bundle = run_experiment(cfg)
    for report in bundle.schemes:
        assert report.mc is not None
        assert abs(report.mc.error_rate - report.analytic_rate) <= 3 * max(report.mc.stderr, 1e-9)


def test_csv_emission_schema(tmp_path):
    bundle = run_experiment(small_config())
    paths = emit_csv(bundle, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["codeword_stats.csv", "error_rates.csv", "histogram.csv"]

    hist = read_csv(tmp_path / "histogram.csv")
    assert hist[0] == ["flat_index", "count"]
    assert len(hist) == 1 + 512
    assert [row[0] for row in hist[1:]] == [str(i) for i in range(512)]

    stats = read_csv(tmp_path / "codeword_stats.csv")
    assert stats[0] == ["scheme", "stat", "value-%"]
    assert len(stats) == 1 + 3 * 4

    rates = read_csv(tmp_path / "error_rates.csv")
    assert rates[0] == ["scheme", "analytic_rate", "optimal_rate", "increase_pct", "mc_rate", "mc_stderr"]
    assert len(rates) == 1 + 3
    assert [row[0] for row in rates[1:]] == ["per-word", "interleaved", "robin"]
    # without Monte Carlo the mc columns are empty
    assert all(row[4] == "" and row[5] == "" for row in rates[1:])


def test_csv_increase_recomputable_to_six_digits(tmp_path):
    bundle = run_experiment(small_config())
    emit_csv(bundle, tmp_path)
    for row in read_csv(tmp_path / "error_rates.csv")[1:]:
        rate, optimal, increase = float(row[1]), float(row[2]), float(row[3])
        recomputed = (rate / optimal - 1.0) * 100.0
        assert increase == pytest.approx(recomputed, rel=2e-5)


def test_csv_reruns_are_byte_identical(tmp_path):
    cfg = small_config()
    emit_csv(run_experiment(cfg), tmp_path / "a")
    emit_csv(run_experiment(cfg), tmp_path / "b")
    for name in ("histogram.csv", "codeword_stats.csv", "error_rates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_svg_emission_parses_and_reflects_bundle(tmp_path):
    bundle = run_experiment(small_config(monte_carlo=True, trials=200))
    paths = emit_svg(bundle, tmp_path)
    assert sorted(p.name for p in paths) == ["error_increase.svg", "histogram.svg", "variation.svg"]
    for path in paths:
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")

    variation = (tmp_path / "variation.svg").read_text()
    assert variation.count("<rect") >= 1 + 9  # frame + 3 bars per scheme
    for report in bundle.schemes:
        assert report.scheme in variation
        assert format_sig(report.stats.max_avg_pct) in variation

    increase = (tmp_path / "error_increase.svg").read_text()
    for report in bundle.schemes:
        assert format_sig(report.increase_pct) in increase
        assert format_sig(report.mc.error_rate) in increase  # mc series present

    no_mc = run_experiment(small_config())
    emit_svg(no_mc, tmp_path / "plain")
    plain = (tmp_path / "plain" / "error_increase.svg").read_text()
    assert "mc_rate" not in plain


def test_histogram_svg_has_word_gridlines(tmp_path):
    bundle = run_experiment(small_config())
    emit_svg(bundle, tmp_path)
    text = (tmp_path / "histogram.svg").read_text()
    assert text.count("<line") >= 9
    assert "word 7" in text
    assert "<polyline" in text


def test_histogram_svg_uniform_counts_render_flat(tmp_path):
    # a full-flip write touches every position once: the polyline is a flat line
    path = tmp_path / "flip.jsonl"
    save_trace(path, [WriteRecord(0, bytes(64)), WriteRecord(0, bytes([0xFF]) * 64)])
    bundle = run_experiment(ExperimentConfig(trace_path=str(path), pw=0.999, warmup=1))
    assert (bundle.histogram == 1).all()
    emit_svg(bundle, tmp_path)
    text = (tmp_path / "histogram.svg").read_text()
    points = text.split('points="')[1].split('"')[0].split()
    ys = {point.split(",")[1] for point in points}
    assert len(ys) == 1


def test_format_sig():
    assert format_sig(None) == ""
    assert format_sig(0.0) == "0"
    assert format_sig(1.0) == "1"
    assert format_sig(math.inf) == "inf"
    assert format_sig(0.0123456789) == "0.0123457"
    assert format_sig(123456789.0) == "123457000"
    assert format_sig(1.23456789e-7) == "0.000000123457"
    assert "e" not in format_sig(9.87654321e-9)


def test_parse_config_text_and_build():
    text = """
    # comment
    workload = narrowint32
    records = 120
    addresses = 8
    width = 10
    schemes = robin , per-word
    pw = 0.995
    include_ecc = false
    monte_carlo = true
    trials = 50
    seed = 9
    warmup = 10
    out = somewhere
    """
    values = parse_config_text(text)
    cfg = config_from_values(values)
    assert cfg.workload.kind == "narrowint32"
    assert cfg.workload.width == 10
    assert cfg.schemes == ("robin", "per-word")
    assert cfg.pw == 0.995
    assert cfg.include_ecc is False
    assert cfg.monte_carlo is True
    assert (cfg.trials, cfg.seed, cfg.warmup) == (50, 9, 10)
    assert cfg.out_dir == "somewhere"


def test_parse_config_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("pw = 0.9\npw = 0.8")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("just words")


def test_config_device_params_path():
    values = parse_config_text(
        """
        workload = irregular
        records = 10
        device_t_write = 2.0
        device_i_write = 1.5
        device_i_c0 = 1.0
        device_polarization = 0.5
        device_magnetic_moment = 0.75
        device_mu_b = 1.25
        device_delta = 4.0
        device_e_charge = 2.0
        """
    )
    cfg = config_from_values(values)
    assert cfg.pw is None
    assert cfg.resolve_pw() == pytest.approx(0.22638117613454956, rel=1e-12)


def test_config_device_params_incomplete():
    with pytest.raises(ConfigError, match="incomplete"):
        config_from_values(parse_config_text("workload = irregular\nrecords = 5\ndevice_t_write = 1"))


def test_config_workload_keys_without_kind():
    with pytest.raises(ConfigError, match="without a workload kind"):
        config_from_values(parse_config_text("trace = x.jsonl\npw = 0.9\nrecords = 10"))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
