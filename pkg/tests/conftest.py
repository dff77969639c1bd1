"""Shared test helpers: small random networks and finite-difference tolerances."""

import numpy as np
import pytest

from inexad.scorer import ae_init, reconstruct

# Central finite differences in float64 resolve gradients to roughly
# this relative precision away from ReLU kinks.
REL_TOL = 1e-4
ABS_TOL = 1e-7
FD_STEP = 1e-5

# Pre-activations closer to zero than this may cross a ReLU kink under
# the finite-difference perturbation; such draws are rejected.
KINK_MARGIN = 1e-3


def assert_grad_close(analytic, numeric):
    """Elementwise |analytic - numeric| <= max(ABS_TOL, REL_TOL * |numeric|)."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    tol = np.maximum(ABS_TOL, REL_TOL * np.abs(numeric))
    gap = np.abs(analytic - numeric)
    worst = int(np.argmax(gap - tol))
    assert np.all(gap <= tol), (
        f"coordinate {worst}: analytic {analytic.flat[worst]!r} vs "
        f"numeric {numeric.flat[worst]!r} (gap {gap.flat[worst]:.3e})"
    )


def small_ae(rng, dim=3, hidden=4, code=2, activation="relu"):
    """Tiny autoencoder with weights rescaled away from the origin.

    Glorot init plus a random shift keeps scores nonzero and, for ReLU,
    makes kink-free inputs easy to find.
    """
    params = ae_init(dim, int(rng.integers(0, 2**31)), hidden=hidden,
                     code=code, activation=activation)
    for layer in params.encoder + params.decoder:
        layer.weight += rng.normal(0.0, 0.1, size=layer.weight.shape)
        layer.bias += rng.normal(0.0, 0.1, size=layer.bias.shape)
    return params


def min_preactivation(params, X):
    """Smallest |pre-activation| over the hidden layers for the batch X."""
    _, enc_cache, dec_cache = reconstruct(params, np.atleast_2d(X))
    margins = [np.min(np.abs(c.pre[0])) for c in (enc_cache, dec_cache)]
    return min(margins)


def draw_kink_free(rng, params, shape, lo=-1.0, hi=1.0, tries=200):
    """Rejection-sample inputs whose hidden pre-activations avoid ReLU kinks."""
    for _ in range(tries):
        X = rng.uniform(lo, hi, size=shape)
        if min_preactivation(params, X) >= KINK_MARGIN:
            return X
    pytest.fail("could not draw a kink-free input batch")
