import json
from pathlib import Path

import numpy as np
import pytest

import mibci

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture(scope="module")
def session():
    spec = mibci.ParadigmSpec(mibci.ParadigmKind.WritingTask, runs=1, trials_per_run=40)
    plans = mibci.generate_sequence(spec, 3)
    rec = mibci.synthesize(spec, plans, {"seed": 5, "erd_depth": 0.8})
    band = mibci.design_bandpass(5, 8.0, 30.0, rec.sample_rate)
    filtered = mibci.filter_recording(band, rec)
    return spec, plans, rec, mibci.extract_epochs(filtered, plans, spec.feature_window)


def test_plan_is_balanced_and_seeded():
    spec = mibci.ParadigmSpec(runs=2, trials_per_run=50)
    plans = mibci.generate_sequence(spec, 1)
    labels = [p.label for p in plans]
    assert labels.count(mibci.ClassLabel.RightHand) == 50
    assert [p.label for p in mibci.generate_sequence(spec, 1)] == labels
    assert plans[1].onset_s - plans[0].onset_s == pytest.approx(10.0)


def test_recording_and_epoch_shapes(session):
    _, plans, rec, epochs = session
    assert rec.data.shape == (30, 40 * 2500)
    assert len(rec.channels) == 30
    assert epochs.data.shape == (40, 30, 1000)
    assert len(epochs) == len(plans)


def test_filter_band_edges():
    f = mibci.design_bandpass(5, 8.0, 30.0, 250.0)
    assert f.magnitude_db(8.0) == pytest.approx(-3.0103, abs=0.01)
    assert f.magnitude_db(30.0) == pytest.approx(-3.0103, abs=0.01)
    assert f.sos.shape == (5, 6)
    assert max(abs(p) for p in f.poles()) < 1.0
    t = np.arange(2500) / 250.0
    x = np.vstack([np.sin(2 * np.pi * 15 * t), np.sin(2 * np.pi * 2 * t)])
    y = mibci.filter_rows(f, x, mibci.FilterMode.ZeroPhase)
    assert np.std(y[0, 500:-500]) == pytest.approx(np.std(x[0]), rel=0.05)
    assert np.std(y[1, 500:-500]) < 0.05 * np.std(x[1])


def test_welch_locates_a_sine():
    t = np.arange(5000) / 250.0
    psd = mibci.welch_psd(np.sin(2 * np.pi * 12 * t)[None, :], 250.0)
    assert psd.freqs[int(np.argmax(psd.power[0]))] == pytest.approx(12.0, abs=0.5)


def test_csp_svm_pipeline(session):
    _, _, _, epochs = session
    model = mibci.fit_csp(epochs, pairs=3)
    assert model.filters.shape == (6, 30)
    assert np.all(np.diff(model.eigvals) <= 1e-12)
    feats = mibci.csp_features(model, epochs)
    svm = mibci.train_svm(feats, c=1.0, standardize=True)
    assert svm.duality_gap <= 1e-6 * max(1.0, svm.objective)
    pred = mibci.predict(svm, feats.values)
    assert np.mean([a == b for a, b in zip(pred.labels, feats.labels)]) > 0.9


def test_cross_validation(session):
    _, _, _, epochs = session
    report = mibci.cross_validate(epochs, None, repeats=2, folds=5, seed=1)
    assert report.accuracy.shape == (2, 5)
    assert report.mean_accuracy > 0.8


def test_svm_two_points():
    fm = mibci.FeatureMatrix(np.array([[1.0], [-1.0]]), [mibci.ClassLabel.RightHand, mibci.ClassLabel.LeftHand])
    model = mibci.train_svm(fm, c=10.0)
    assert model.w[0] == pytest.approx(1.0, abs=1e-9)
    assert model.b == pytest.approx(0.0, abs=1e-9)
    assert model.objective == pytest.approx(0.5, abs=1e-9)


def test_statistics():
    arrow = [4, 3, 5, 4, 2, 4, 3, 5, 4, 2]
    writing = [2, 2, 4, 3, 1, 2, 1, 4, 3, 2]
    r = mibci.paired_t_test([float(v) for v in arrow], [float(v) for v in writing])
    assert r.df == 9
    assert str(mibci.likert_summary(arrow)) == "3.6±1.1"
    assert str(mibci.likert_summary(writing)) == "2.4±1.1"
    assert mibci.screen_subjects([("a", 0.55, 0.58), ("b", 0.55, 0.72)]) == (["b"], ["a"])


def test_errors_map_to_python_exceptions():
    with pytest.raises(mibci.ConfigError):
        mibci.design_bandpass(5, 30.0, 8.0, 250.0)
    with pytest.raises(ValueError):
        mibci.ParadigmSpec(runs=0)
    x = np.random.default_rng(0).normal(size=(6, 2, 50))
    x = np.concatenate([x, x.sum(axis=1, keepdims=True)], axis=1)
    epochs = mibci.EpochSet(x, [mibci.ClassLabel.LeftHand, mibci.ClassLabel.RightHand] * 3)
    with pytest.raises(mibci.NumericalError):
        mibci.fit_csp(epochs, pairs=1, ridge=0.0)


def test_small_experiment(tmp_path):
    cfg = json.loads((CONFIGS / "paper-repro.json").read_text())
    cfg.update({"subjects": 2, "paradigm": {"runs": 1, "trials_per_run": 20}, "evaluation": {"repeats": 1, "folds": 5}})
    cfg["output"]["export_subject"] = 1
    report = mibci.run_experiment(cfg, str(tmp_path / "a"), write_bundle=True)
    assert report["format"] == "report-v1"
    assert report["config_hash"] == mibci.config_hash(cfg)
    assert (tmp_path / "a" / "report.json").read_text().find(report["config_hash"]) >= 0
    again = mibci.run_experiment(cfg)
    assert again == report


def test_module_under_test_is_the_build_copy():
    import os

    build_dir = os.environ.get("MIBCI_PY_BUILD_DIR")
    if build_dir:
        assert mibci.__file__.startswith(build_dir)


def test_bad_config_values_raise_config_error():
    with pytest.raises(mibci.ConfigError):
        mibci.config_hash({"subjects": "ten"})
