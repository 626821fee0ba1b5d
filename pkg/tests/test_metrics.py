import numpy as np
import pytest

from pachain.metrics import (
    DEFAULT_CHANNEL_BANDWIDTH,
    FLOOR_DB,
    aclr,
    amam_points,
    estimate_psd,
    nmse,
    report,
)
from pachain.signals import DegenerateSignalError, Signal, unit_excitation


def make_signal(samples, oversampling=8):
    samples = np.asarray(samples, dtype=complex)
    return Signal(
        samples, oversampling, len(samples) // oversampling,
        float(np.mean(np.abs(samples) ** 2)),
    )


def white_noise(n, seed, oversampling=8):
    rng = np.random.default_rng(seed)
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)
    return make_signal(w, oversampling)


def test_nmse_perfect_match_is_minus_infinity():
    x = white_noise(1024, 0)
    assert nmse(x, x) == float("-inf")


def test_nmse_known_offset():
    rng = np.random.default_rng(1)
    d = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
    offset = 0.01 + 0.02j
    desired = make_signal(d)
    actual = make_signal(d + offset)
    expected = 10 * np.log10(len(d) * abs(offset) ** 2 / np.sum(np.abs(d) ** 2))
    assert nmse(desired, actual) == pytest.approx(expected, abs=1e-12)


def test_nmse_zero_reference_raises():
    zero = make_signal(np.zeros(64))
    other = white_noise(64, 2)
    with pytest.raises(DegenerateSignalError):
        nmse(zero, other)


def test_nmse_scale_invariant_spot_check():
    d = white_noise(2048, 3)
    a = make_signal(d.samples + 0.05 * white_noise(2048, 4).samples)
    c = 2.7 * np.exp(0.4j)
    scaled_d = make_signal(c * d.samples)
    scaled_a = make_signal(c * a.samples)
    assert nmse(scaled_d, scaled_a) == pytest.approx(nmse(d, a), abs=1e-10)


def test_psd_axis_is_symmetric_and_in_symbol_rates():
    x = white_noise(32768, 5)
    psd = estimate_psd(x)
    assert psd.frequencies[0] == pytest.approx(-psd.frequencies[-1], abs=1e-12)
    assert len(psd.frequencies) == 1023  # even FFT: unpaired -Nyquist bin dropped
    assert psd.frequencies[-1] < 4.0  # half the oversampling factor
    assert np.all(np.diff(psd.frequencies) > 0)


def test_psd_peak_normalization():
    x = white_noise(32768, 6)
    psd = estimate_psd(x)
    assert np.max(psd.power_density) == pytest.approx(0.0, abs=1e-12)
    assert psd.peak_density > 0


def test_psd_total_power_parseval():
    """Integrated density must recover the time-domain mean power (2%)."""
    x = unit_excitation(4096, 8, 0.22, 16, 7)
    psd = estimate_psd(x)
    assert psd.total_power == pytest.approx(x.mean_power, rel=0.02)


def test_psd_white_noise_is_flat():
    x = white_noise(1 << 19, 8)
    psd = estimate_psd(x, segment_length=512)
    # every bin within a few dB of the peak once enough segments average
    assert np.min(psd.power_density) > -3.0


def test_aclr_white_noise_near_zero():
    x = white_noise(200_000, 9)
    assert abs(aclr(estimate_psd(x))) < 0.5


def test_aclr_shaped_signal_is_strongly_negative():
    x = unit_excitation(4096, 8, 0.22, 16, 10)
    value = aclr(estimate_psd(x))
    assert value < -30.0


def test_aclr_gain_invariant_spot_check():
    x = unit_excitation(2048, 8, 0.22, 16, 11)
    scaled = make_signal(7.3 * x.samples)
    assert aclr(estimate_psd(scaled)) == pytest.approx(aclr(estimate_psd(x)), abs=1e-10)


def test_aclr_needs_enough_spectrum():
    x = white_noise(8192, 12, oversampling=2)
    psd = estimate_psd(x)
    with pytest.raises(ValueError):
        aclr(psd)  # fs = 2 cannot cover 1.5 channel bandwidths


def test_aclr_bandwidth_parameter():
    x = unit_excitation(2048, 8, 0.22, 16, 13)
    psd = estimate_psd(x)
    narrow = aclr(psd, channel_bandwidth=0.8)
    default = aclr(psd, channel_bandwidth=DEFAULT_CHANNEL_BANDWIDTH)
    # a channel narrower than the occupied band leaks more into the adjacents
    assert narrow > default


def test_amam_points_shape_and_decimation():
    x = unit_excitation(256, 8, 0.22, 16, 14)
    y = make_signal(0.9 * x.samples)
    points = amam_points(x, y)
    assert points.shape == (len(x), 2)
    np.testing.assert_allclose(points[:, 0], np.abs(x.samples))
    np.testing.assert_allclose(points[:, 1], 0.9 * np.abs(x.samples), rtol=1e-12)
    thinned = amam_points(x, y, decimate=8)
    assert thinned.shape == (len(x) // 8, 2)


def test_report_bundles_everything():
    x = unit_excitation(1024, 8, 0.22, 16, 15)
    y = make_signal(x.samples + 0.01 * white_noise(len(x), 16).samples)
    bundle = report(x, y, amam_decimate=4)
    assert bundle.nmse_db < -30
    assert bundle.aclr_db < -20
    assert bundle.amam.shape == (len(x) // 4, 2)
    assert bundle.psd.frequencies.size == bundle.psd.power_density.size
    assert FLOOR_DB < bundle.nmse_db
