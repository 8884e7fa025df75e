"""Closed-form ambient models of the three constant-curvature geometries.

Points are stored in homogeneous 3-vectors:

* flat: ``(x, y, 1)``, tangent vectors ``(w1, w2, 0)``;
* sphere: unit vectors of R^3;
* hyperbolic: upper sheet of ``X1^2 + X2^2 - X3^2 = -1``.

In all three models the geodesic through ``X`` with tangent ``V`` lies in the
linear plane spanned by ``X`` and ``V``, so ``cross(X, V)`` is a plane normal
and ``dot(Y - X, cross(X, V))`` tells on which side of the geodesic ``Y`` lies.
"""
import numpy as np


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class FlatModel:
    name = "flat"
    curvature = 0.0

    @staticmethod
    def inner(a, b):
        return _dot(a, b)

    @staticmethod
    def dist(X, Y):
        return np.linalg.norm(Y - X, axis=-1)

    @staticmethod
    def log_dir(X, Y):
        """Unnormalized initial direction of the geodesic from X to Y."""
        return Y - X

    @staticmethod
    def exp(X, V, t):
        t = np.asarray(t)[..., None]
        return X + t * V

    @staticmethod
    def exp_velocity(X, V, t):
        return np.broadcast_to(V, np.broadcast_shapes(X.shape, np.shape(t) + (3,))).copy()


class SphereModel:
    name = "sphere"
    curvature = 1.0

    @staticmethod
    def inner(a, b):
        return _dot(a, b)

    @staticmethod
    def dist(X, Y):
        # atan2 form is accurate at every separation
        return np.arctan2(np.linalg.norm(np.cross(X, Y), axis=-1), _dot(X, Y))

    @staticmethod
    def log_dir(X, Y):
        D = Y - X
        return D - _dot(X, D)[..., None] * X

    @staticmethod
    def exp(X, V, t):
        t = np.asarray(t)[..., None]
        return np.cos(t) * X + np.sin(t) * V

    @staticmethod
    def exp_velocity(X, V, t):
        t = np.asarray(t)[..., None]
        return -np.sin(t) * X + np.cos(t) * V


class HyperbolicModel:
    name = "hyperbolic"
    curvature = -1.0

    @staticmethod
    def inner(a, b):
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]

    @classmethod
    def dist(cls, X, Y):
        D = Y - X
        q = np.maximum(cls.inner(D, D), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(q))

    @classmethod
    def log_dir(cls, X, Y):
        D = Y - X
        return D + cls.inner(X, D)[..., None] * X

    @staticmethod
    def exp(X, V, t):
        t = np.asarray(t)[..., None]
        return np.cosh(t) * X + np.sinh(t) * V

    @staticmethod
    def exp_velocity(X, V, t):
        t = np.asarray(t)[..., None]
        return np.sinh(t) * X + np.cosh(t) * V


FLAT = FlatModel()
SPHERE = SphereModel()
HYPERBOLIC = HyperbolicModel()
