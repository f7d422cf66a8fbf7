"""Rigid-motion actions on entity parameterizations.

Two views of the same group action are provided: infinitesimal generator
velocities (used to build the rigid-motion basis whose rank is the degree of
rigidity) and finite transforms (used to place solved clusters and to verify
the generators by finite differences).  Rotations are taken about the origin;
changing the pivot only adds a combination of translation rows, so ranks are
pivot-independent.

2D actions:
  point (x, y):        translate by u; rotate velocity (-y, x)
  line (phi, rho):     translate -> rho += u . n(phi); rotate -> phi += theta
  circle (cx, cy, r):  center moves like a point, radius is invariant

3D actions:
  point p:                       p -> R p + t
  line (p, d):                   (R p + t, R d)
  hessian plane (n, d):          (R n, d - (R n) . t)
  point-normal plane (p, n):     (R p + t, R n)
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    CIRCLE2,
    HESSIAN,
    LINE2,
    LINE3,
    PLANE3,
    POINT2,
    POINT3,
    Entity,
)


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_3d(axis: np.ndarray, theta: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def generator_count(dimension: int) -> int:
    return 3 if dimension == 2 else 6


def motion_rows(entity: Entity, params) -> np.ndarray:
    """k x raw matrix of generator velocities at the given parameter values.

    Generators are ordered: translations along the coordinate axes, then
    rotations (one in 2D, about the x/y/z axes in 3D).
    """
    p = np.asarray(params, dtype=float)
    spec = entity.spec
    k = generator_count(spec.dimension)
    rows = np.zeros((k, spec.raw_size))

    if entity.kind == POINT2:
        rows[0] = [1.0, 0.0]
        rows[1] = [0.0, 1.0]
        rows[2] = [-p[1], p[0]]
    elif entity.kind == LINE2:
        phi = p[0]
        rows[0] = [0.0, math.cos(phi)]
        rows[1] = [0.0, math.sin(phi)]
        rows[2] = [1.0, 0.0]
    elif entity.kind == CIRCLE2:
        rows[0] = [1.0, 0.0, 0.0]
        rows[1] = [0.0, 1.0, 0.0]
        rows[2] = [-p[1], p[0], 0.0]
    elif entity.kind == POINT3:
        for i in range(3):
            rows[i, i] = 1.0
        for i, omega in enumerate(np.eye(3)):
            rows[3 + i] = np.cross(omega, p)
    elif entity.kind == LINE3:
        pt, d = p[0:3], p[3:6]
        for i in range(3):
            rows[i, i] = 1.0
        for i, omega in enumerate(np.eye(3)):
            rows[3 + i, 0:3] = np.cross(omega, pt)
            rows[3 + i, 3:6] = np.cross(omega, d)
    elif entity.kind == PLANE3 and spec.representation == HESSIAN:
        n = p[0:3]
        for i in range(3):
            rows[i, 3] = -n[i]
        for i, omega in enumerate(np.eye(3)):
            rows[3 + i, 0:3] = np.cross(omega, n)
    elif entity.kind == PLANE3:
        pt, n = p[0:3], p[3:6]
        for i in range(3):
            rows[i, i] = 1.0
        for i, omega in enumerate(np.eye(3)):
            rows[3 + i, 0:3] = np.cross(omega, pt)
            rows[3 + i, 3:6] = np.cross(omega, n)
    else:
        raise ValueError(f"no motion action for kind {entity.kind!r}")
    return rows


def apply_rigid(entity: Entity, params, rotation: np.ndarray, translation) -> np.ndarray:
    """Finite rigid transform of one entity's parameter vector."""
    p = np.array(params, dtype=float)
    t = np.asarray(translation, dtype=float)
    R = np.asarray(rotation, dtype=float)

    if entity.kind in (POINT2, POINT3):
        return R @ p + t
    if entity.kind == CIRCLE2:
        c = R @ p[0:2] + t
        return np.array([c[0], c[1], p[2]])
    if entity.kind == LINE2:
        theta = math.atan2(R[1, 0], R[0, 0])
        phi = p[0] + theta
        n = np.array([math.cos(phi), math.sin(phi)])
        return np.array([phi, p[1] + n @ t])
    if entity.kind == LINE3:
        return np.concatenate([R @ p[0:3] + t, R @ p[3:6]])
    if entity.kind == PLANE3 and entity.spec.representation == HESSIAN:
        n = R @ p[0:3]
        return np.array([n[0], n[1], n[2], p[3] - n @ t])
    if entity.kind == PLANE3:
        return np.concatenate([R @ p[0:3] + t, R @ p[3:6]])
    raise ValueError(f"no rigid action for kind {entity.kind!r}")


def fit_rigid_2d(source: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares rotation + translation mapping source points onto target.

    Reflections are excluded.  With a single point pair the rotation is the
    identity.  Returns (R, t) with R 2x2.
    """
    src = np.atleast_2d(np.asarray(source, dtype=float))
    dst = np.atleast_2d(np.asarray(target, dtype=float))
    if src.shape != dst.shape or src.shape[1] != 2:
        raise ValueError("need matching (k, 2) point arrays")
    if src.shape[0] == 0:
        return np.eye(2), np.zeros(2)
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    a = src - cs
    b = dst - cd
    # optimal angle from the cross/dot sums
    num = float(np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))
    den = float(np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]))
    theta = 0.0 if (num == 0.0 and den == 0.0) else math.atan2(num, den)
    R = rotation_2d(theta)
    t = cd - R @ cs
    return R, t
