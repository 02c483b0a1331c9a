"""Piecewise-constant SPD material tensors and derived wave-speed scalars."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CoefficientField:
    """Permittivity/permeability tensors per subdomain plus derived data.

    Parameters
    ----------
    eps, mu : dict mapping subdomain label -> SPD 3x3 array (scalars and
        length-3 diagonals are promoted).
    domain_diameter : diameter of the computational box.

    Derived fields: inverse tensors ``zeta`` (eps^-1) and ``chi`` (mu^-1),
    per-subdomain eigenvalue extremes, the minimum wavespeed
    ``theta = min_P 1/sqrt(eps_max * mu_max)``, and the diameter.
    """

    eps: dict
    mu: dict
    domain_diameter: float
    zeta: dict = field(init=False)
    chi: dict = field(init=False)
    eps_min: dict = field(init=False)
    eps_max: dict = field(init=False)
    mu_min: dict = field(init=False)
    mu_max: dict = field(init=False)
    chi_max: dict = field(init=False)
    wavespeed_min: float = field(init=False)

    def __post_init__(self):
        if set(self.eps) != set(self.mu):
            raise ValueError("eps and mu must cover the same subdomain labels")
        self.eps = {k: _as_spd_tensor(v, f"eps[{k}]") for k, v in self.eps.items()}
        self.mu = {k: _as_spd_tensor(v, f"mu[{k}]") for k, v in self.mu.items()}
        self.zeta = {k: np.linalg.inv(v) for k, v in self.eps.items()}
        self.chi = {k: np.linalg.inv(v) for k, v in self.mu.items()}
        self.eps_min = {k: float(np.linalg.eigvalsh(v).min()) for k, v in self.eps.items()}
        self.eps_max = {k: float(np.linalg.eigvalsh(v).max()) for k, v in self.eps.items()}
        self.mu_min = {k: float(np.linalg.eigvalsh(v).min()) for k, v in self.mu.items()}
        self.mu_max = {k: float(np.linalg.eigvalsh(v).max()) for k, v in self.mu.items()}
        self.chi_max = {k: float(np.linalg.eigvalsh(v).max()) for k, v in self.chi.items()}
        self.wavespeed_min = min(
            1.0 / np.sqrt(self.eps_max[k] * self.mu_max[k]) for k in self.eps)

    @classmethod
    def isotropic(cls, mesh_or_diameter, eps=1.0, mu=1.0, labels=(0,)):
        """Constant isotropic coefficients on the given subdomain labels."""
        if hasattr(mesh_or_diameter, "vertices"):
            verts = mesh_or_diameter.vertices
            d = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))
            labels = tuple(np.unique(mesh_or_diameter.labels).tolist())
        else:
            d = float(mesh_or_diameter)
        return cls(eps={k: eps for k in labels}, mu={k: mu for k in labels},
                   domain_diameter=d)

    def tensor_arrays(self, labels):
        """Per-element (nt, 3, 3) arrays of eps, zeta and chi."""
        labs = np.asarray(labels)
        eps = np.stack([self.eps[k] for k in labs.tolist()])
        zeta = np.stack([self.zeta[k] for k in labs.tolist()])
        chi = np.stack([self.chi[k] for k in labs.tolist()])
        return eps, zeta, chi


def _as_spd_tensor(value, name):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = a * np.eye(3)
    elif a.shape == (3,):
        a = np.diag(a)
    elif a.shape != (3, 3):
        raise ValueError(f"{name}: expected scalar, diagonal or 3x3 tensor")
    if not np.allclose(a, a.T, atol=1e-14):
        raise ValueError(f"{name}: tensor must be symmetric")
    if np.linalg.eigvalsh(a).min() <= 0:
        raise ValueError(f"{name}: tensor must be positive definite")
    return a
