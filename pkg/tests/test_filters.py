import numpy as np
import pytest
from scipy import signal

from dsdrive import NtfFir, RationalFilter, evaluate, load_ntf, save_ntf
from dsdrive.exceptions import ConfigError


def test_first_difference_endpoints():
    ntf = NtfFir([1.0, -1.0])
    assert evaluate(ntf, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert evaluate(ntf, np.pi) == pytest.approx(2.0, abs=1e-12)


def test_fir_response_matches_fourier_sum(rng):
    q = np.concatenate(([1.0], rng.normal(size=7)))
    ntf = NtfFir(q)
    omega = rng.uniform(0.0, np.pi, size=32)
    got = evaluate(ntf, omega)
    want = np.array([sum(c * np.exp(-1j * w * k) for k, c in enumerate(q))
                     for w in omega])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_rational_response_matches_freqz(rng):
    num = rng.normal(size=4)
    num[0] = 1.0
    den = np.array([1.0, -0.4, 0.1])
    filt = RationalFilter(num, den)
    omega = np.linspace(0.0, np.pi, 64)
    _, want = signal.freqz(filt.num, filt.den, worN=omega)
    np.testing.assert_allclose(filt.freq_response(omega), want,
                               rtol=1e-10, atol=1e-12)


def test_poles_and_stability():
    stable = RationalFilter([1.0], [1.0, -0.5])
    assert stable.is_stable()
    np.testing.assert_allclose(stable.poles(), [0.5])
    unstable = RationalFilter([1.0], [1.0, -1.5])
    assert not unstable.is_stable()


def test_den_normalization():
    f = RationalFilter([2.0, 4.0], [2.0, 1.0])
    assert f.den[0] == 1.0
    np.testing.assert_allclose(f.num, [1.0, 2.0])
    with pytest.raises(ConfigError):
        RationalFilter([1.0], [0.0, 1.0])


def test_ntf_requires_unit_leading_coefficient():
    with pytest.raises(ConfigError):
        NtfFir([0.999, -1.0])
    with pytest.raises(ConfigError):
        NtfFir([1.0, float("nan")])


def test_evaluate_domain():
    with pytest.raises(ConfigError):
        evaluate(NtfFir([1.0]), -0.1)
    with pytest.raises(ConfigError):
        evaluate(NtfFir([1.0]), 4.0)


def test_ntf_json_roundtrip_fir(tmp_path):
    path = tmp_path / "ntf.json"
    ntf = NtfFir([1.0, -0.75, 0.25])
    save_ntf(path, ntf, gamma=1.5, fs=100e3, designed_for_sigma=0.2)
    loaded, meta = load_ntf(path)
    assert isinstance(loaded, NtfFir)
    np.testing.assert_array_equal(loaded.q, ntf.q)
    assert meta == {"gamma": 1.5, "fs": 100e3, "designed_for_sigma": 0.2}
    # schema check: the file carries exactly the documented keys
    import json
    doc = json.loads(path.read_text())
    assert set(doc) == {"q", "gamma", "fs", "designed_for_sigma"}


def test_ntf_json_roundtrip_rational(tmp_path):
    path = tmp_path / "ntf.json"
    ntf = RationalFilter([1.0, -2.0, 1.0], [1.0, -0.5, 0.06])
    save_ntf(path, ntf, gamma=1.5, fs=100e3)
    loaded, meta = load_ntf(path)
    assert isinstance(loaded, RationalFilter)
    np.testing.assert_array_equal(loaded.num, ntf.num)
    np.testing.assert_array_equal(loaded.den, ntf.den)
    assert meta["designed_for_sigma"] is None


def test_impulse_response_first_order():
    f = RationalFilter([1.0], [1.0, -0.5])
    h = f.impulse_response(8)
    np.testing.assert_allclose(h, 0.5 ** np.arange(8), rtol=1e-14)
