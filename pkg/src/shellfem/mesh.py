"""Uniform and Shishkin-type partitions of [0, 1]."""

import enum
import math
from dataclasses import dataclass

import numpy as np


class MeshKind(enum.Enum):
    UNIFORM = "uniform"
    SHISHKIN_ONE_SIDED = "shishkin1"
    SHISHKIN_TWO_SIDED = "shishkin2"


@dataclass(frozen=True, eq=False)
class Mesh:
    """An ordered partition ``0 = x_0 < x_1 < ... < x_N = 1``.

    ``tau`` is the transition point of a Shishkin mesh (0 for uniform meshes).
    """

    nodes: np.ndarray
    kind: MeshKind
    tau: float = 0.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValueError("a mesh needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("mesh must start at 0 and end at 1")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self):
        return len(self.nodes) - 1

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def h_max(self):
        return float(self.widths.max())

    def __repr__(self):
        return f"Mesh(kind={self.kind.value}, N={self.n_elements}, tau={self.tau:.6g})"


def _block(start, stop, count):
    # exact endpoints, uniform interior spacing
    x = start + np.arange(count + 1) * ((stop - start) / count)
    x[-1] = stop
    return x


def _uniform_nodes(N):
    # i / N is correctly rounded, so i = N/4, N/2, 3N/4 land exactly on 1/4, 1/2, 3/4
    return np.arange(N + 1) / N


def _check_common(N, sigma, eps):
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool):
        raise TypeError(f"N must be an integer, got {N!r}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def uniform(N):
    """Uniform mesh with ``N`` elements, ``x_i = i / N``."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return Mesh(_uniform_nodes(int(N)), MeshKind.UNIFORM, 0.0)


def transition_point(N, sigma, eps, cap):
    """``min(cap, sigma * eps * ln N)``; a tie resolves to ``cap``."""
    return min(cap, sigma * eps * math.log(N))


def shishkin_two_sided(N, sigma, eps):
    """Shishkin mesh with layers at both ends.

    ``[0, tau]`` and ``[1 - tau, 1]`` get N/4 uniform elements each and
    ``[tau, 1 - tau]`` gets N/2, where ``tau = min(1/4, sigma eps ln N)``.
    """
    _check_common(N, sigma, eps)
    if N < 4 or N % 4:
        raise ValueError(f"two-sided Shishkin mesh needs N divisible by 4, got {N}")
    N = int(N)
    tau = transition_point(N, sigma, eps, 0.25)
    if tau == 0.25:
        nodes = _uniform_nodes(N)
    else:
        q = N // 4
        nodes = np.concatenate(
            [_block(0.0, tau, q), _block(tau, 1.0 - tau, 2 * q)[1:], _block(1.0 - tau, 1.0, q)[1:]]
        )
    return Mesh(nodes, MeshKind.SHISHKIN_TWO_SIDED, tau)


def shishkin_one_sided(N, sigma, eps):
    """Shishkin mesh refined towards x = 0 only.

    N/2 uniform elements on each of ``[0, tau]`` and ``[tau, 1]`` with
    ``tau = min(1/2, sigma eps ln N)``.
    """
    _check_common(N, sigma, eps)
    if N < 2 or N % 2:
        raise ValueError(f"one-sided Shishkin mesh needs an even N, got {N}")
    N = int(N)
    tau = transition_point(N, sigma, eps, 0.5)
    if tau == 0.5:
        nodes = _uniform_nodes(N)
    else:
        half = N // 2
        nodes = np.concatenate([_block(0.0, tau, half), _block(tau, 1.0, half)[1:]])
    return Mesh(nodes, MeshKind.SHISHKIN_ONE_SIDED, tau)


def build_mesh(kind, N, sigma=4.0, eps=1.0):
    kind = MeshKind(kind)
    if kind is MeshKind.UNIFORM:
        return uniform(N)
    if kind is MeshKind.SHISHKIN_ONE_SIDED:
        return shishkin_one_sided(N, sigma, eps)
    return shishkin_two_sided(N, sigma, eps)
