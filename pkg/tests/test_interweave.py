import numpy as np
import pytest
from scipy import integrate

from tensorvar.sampler.interweave import PAIRS, interweave_pair, interweave_step, pair_gig_params
from tensorvar.tensor import CpTensor3, cp_compose


def random_cp(rng, N=4, P=3, R=3):
    return CpTensor3(rng.normal(size=(N, R)), rng.normal(size=(N, R)), rng.normal(size=(P, R)))


@pytest.mark.parametrize("pair", PAIRS)
def test_tensor_invariant(pair, rng):
    cp = random_cp(rng)
    sd = rng.uniform(0.5, 2, size=(2 * cp.N + cp.P, cp.R))
    new, skipped = interweave_step(cp, pair, sd, rng)
    assert skipped == 0
    assert np.allclose(cp_compose(new), cp_compose(cp), rtol=1e-10, atol=1e-12)


def test_rescaled_rows_and_signs_kept(rng):
    src, dst = rng.normal(size=(4, 3)), rng.normal(size=(3, 3))
    sd_src, sd_dst = np.ones((4, 3)), np.ones((3, 3))
    new_src, new_dst, _ = interweave_pair(src, dst, sd_src, sd_dst, rng)
    assert np.allclose(new_src / new_src[0], src / src[0], rtol=1e-12)
    assert np.array_equal(np.sign(new_src[0]), np.sign(src[0]))
    lam, chi, psi = pair_gig_params(src / src[0], dst * src[0], sd_src, sd_dst, 1)
    assert lam == 0.5
    assert (src / src[0])[0, 1] == 1.0


def test_skips_zero_entries(rng):
    src, dst = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    src[0, 0] = 0.0
    dst[:, 1] = 0.0
    new_src, new_dst, skipped = interweave_pair(src, dst, np.ones((3, 2)), np.ones((3, 2)), rng)
    assert skipped == 2
    assert np.array_equal(new_src, src) and np.array_equal(new_dst, dst)


def test_stationary_law_of_first_row():
    """Repeated moves from the same state draw d^2 from the conditional given the rescaled columns."""
    rng = np.random.default_rng(21)
    src = np.array([[0.8], [0.5], [-1.2], [0.3]])
    dst = np.array([[1.5], [-0.4]])
    sd_src = np.array([[1.0], [0.7], [1.3], [0.9]])
    sd_dst = np.array([[0.6], [1.1]])
    a = src[:, 0] / src[0, 0]
    b = dst[:, 0] * src[0, 0]
    n_s, n_d = len(a), len(b)

    def dens(d):  # density of d > 0 under independent normal priors, with Jacobian of the rescaling
        return (np.exp(-0.5 * d * d * np.sum((a / sd_src[:, 0]) ** 2) - 0.5 * np.sum((b / sd_dst[:, 0]) ** 2) / d ** 2)
                * d ** (n_s - 1 - n_d))
    z = integrate.quad(dens, 0, np.inf)[0]
    m2 = integrate.quad(lambda d: d * d * dens(d), 0, np.inf)[0] / z
    draws = np.array([interweave_pair(src, dst, sd_src, sd_dst, rng)[0][0, 0] for _ in range(40_000)]) ** 2
    assert abs(draws.mean() - m2) / m2 < 0.02
