"""
Box-scheme finite-volume Laplace solver on the graded cross-section grid.

Potentials live on nodes and permittivities on cells. Each grid edge couples
its two nodes with a weight collected from the half-cells on either side, so
the assembled matrix is the stiffness form of the field energy and missing
neighbours at the outer boundary give a natural zero-flux condition.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import distance_transform_edt
from scipy.sparse.linalg import spsolve

from surfloss.constants import EPSILON_0, NM, UM
from surfloss.exceptions import FieldSolverError, OutOfDomainError
from surfloss.fields.cross_section import CrossSection, Medium, Mesh
from surfloss.types import Resolution

logger = logging.getLogger(__name__)

#: Relative infinity-norm residual accepted from the linear solve
RESIDUAL_TOLERANCE = 1e-8

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class FieldSolution:
    mesh: Mesh

    #: Potential per node, V
    potential: np.ndarray

    #: Squared field magnitude per cell, V²/m²
    cell_e2: np.ndarray

    #: Relative residual of the linear solve
    residual: float = 0.0

    #: Energy per unit length from the stiffness form, J/m
    edge_energy: float = 0.0

    @property
    def cross_section(self) -> CrossSection:
        return self.mesh.cross_section

    @property
    def resolution(self) -> Resolution:
        return self.mesh.resolution

    @property
    def field_magnitude(self) -> np.ndarray:
        """
        |E| per cell, V/m
        """
        return np.sqrt(self.cell_e2)

    @property
    def cell_area(self) -> np.ndarray:
        return np.outer(self.mesh.dx, self.mesh.dz)

    @property
    def cell_energy(self) -> np.ndarray:
        """
        Energy per unit length in each cell, J/m
        """
        return 0.5 * EPSILON_0 * self.mesh.permittivity * self.cell_e2 * self.cell_area

    @property
    def energy_by_medium(self) -> Dict[Medium, float]:
        energy = self.cell_energy
        return {
            medium: float(energy[self.mesh.medium == medium].sum())
            for medium in Medium
            if medium != Medium.conductor
        }

    @property
    def total_energy(self) -> float:
        """
        Sum of every dielectric cell's energy, J/m
        """
        return float(sum(self.energy_by_medium.values()))


def _edge_weights(mesh: Mesh):
    eps = mesh.permittivity
    dx, dz = mesh.dx, mesh.dz

    # Horizontal edges, shape (nx - 1, nz): half-cells below and above
    eps_z = np.pad(eps, ((0, 0), (1, 1)))
    dz_pad = np.pad(dz, 1)
    wx = (eps_z[:, :-1] * dz_pad[:-1] + eps_z[:, 1:] * dz_pad[1:]) / (2 * dx[:, None])

    # Vertical edges, shape (nx, nz - 1)
    eps_x = np.pad(eps, ((1, 1), (0, 0)))
    dx_pad = np.pad(dx, 1)
    wz = (eps_x[:-1, :] * dx_pad[:-1, None] + eps_x[1:, :] * dx_pad[1:, None]) / (2 * dz[None, :])
    return wx, wz


def _stiffness(mesh: Mesh) -> sparse.csr_matrix:
    nx, nz = mesh.x.size, mesh.z.size
    index = np.arange(nx * nz).reshape(nx, nz)
    wx, wz = _edge_weights(mesh)

    a = np.concatenate((index[:-1, :].ravel(), index[:, :-1].ravel()))
    b = np.concatenate((index[1:, :].ravel(), index[:, 1:].ravel()))
    w = np.concatenate((wx.ravel(), wz.ravel()))

    rows = np.concatenate((a, b, a, b))
    cols = np.concatenate((a, b, b, a))
    data = np.concatenate((w, w, -w, -w))
    return sparse.coo_matrix((data, (rows, cols)), shape=(nx * nz, nx * nz)).tocsr()


def cell_squared_field(mesh: Mesh, potential: np.ndarray) -> np.ndarray:
    """
    |E|² per cell from the differences along its four edges
    """
    dx, dz = mesh.dx[:, None], mesh.dz[None, :]
    bottom = np.diff(potential[:, :-1], axis=0)
    top = np.diff(potential[:, 1:], axis=0)
    left = np.diff(potential[:-1, :], axis=1)
    right = np.diff(potential[1:, :], axis=1)
    return (bottom**2 + top**2) / (2 * dx**2) + (left**2 + right**2) / (2 * dz**2)


def solve_mesh(mesh: Mesh) -> FieldSolution:
    stiffness = _stiffness(mesh)
    fixed = mesh.fixed.ravel()
    free = ~fixed
    fixed_values = mesh.fixed_potential.ravel()[fixed]

    lhs = stiffness[free][:, free].tocsc()
    rhs = -(stiffness[free][:, fixed] @ fixed_values)
    solution = spsolve(lhs, rhs)

    residual_norm = np.abs(lhs @ solution - rhs).max(initial=0.0)
    scale = (
        abs(lhs).sum(axis=1).max() * np.abs(solution).max(initial=0.0)
        + np.abs(rhs).max(initial=0.0)
    )
    residual = float(residual_norm / scale) if scale > 0 else 0.0
    if not np.isfinite(residual) or residual > RESIDUAL_TOLERANCE:
        raise FieldSolverError(residual, RESIDUAL_TOLERANCE)

    potential = np.empty(fixed.size)
    potential[fixed] = fixed_values
    potential[free] = solution
    potential = potential.reshape(mesh.fixed.shape)

    edge_energy = 0.5 * EPSILON_0 * float(potential.ravel() @ (stiffness @ potential.ravel()))
    logger.info(
        "Solved %d unknowns, relative residual %.2e",
        int(free.sum()),
        residual,
    )
    return FieldSolution(
        mesh=mesh,
        potential=potential,
        cell_e2=cell_squared_field(mesh, potential),
        residual=residual,
        edge_energy=edge_energy,
    )


def solve_cross_section(
    cs: CrossSection,
    resolution: Resolution = Resolution.medium,
) -> FieldSolution:
    """
    Solve the cross-section's electrostatics at a resolution preset.

    :raises GridTooLargeError: The grid would exceed the node limit
    :raises FieldSolverError: The solve missed the residual tolerance
    """
    return solve_mesh(cs.discretize(resolution))


def _dielectric_field(sol: FieldSolution) -> np.ndarray:
    magnitude = sol.field_magnitude
    conductor = sol.mesh.medium == Medium.conductor
    if not conductor.any():
        return magnitude
    _, (ix, iz) = distance_transform_edt(conductor, return_indices=True)
    return magnitude[ix, iz]


def field_probe(sol: FieldSolution, x: ArrayLike, z: ArrayLike) -> ArrayLike:
    """
    Bilinear interpolation of |E| (V/m) at ``x`` (μm) and ``z`` (nm).

    Cells inside conductors carry the value of the nearest dielectric cell,
    so a probe on a conductor surface returns the adjacent field.
    """
    mesh = sol.mesh
    xs = np.asarray(x, dtype=float) * UM
    zs = np.asarray(z, dtype=float) * NM
    domain = mesh.cross_section.domain
    if (
        np.any(xs < domain.x0)
        or np.any(xs > domain.x1)
        or np.any(zs < domain.z0)
        or np.any(zs > domain.z1)
    ):
        raise OutOfDomainError(f"Probe point ({x} μm, {z} nm) lies outside the domain")

    xc, zc = mesh.x_centres, mesh.z_centres
    interpolator = RegularGridInterpolator((xc, zc), _dielectric_field(sol))
    points = np.stack(
        np.broadcast_arrays(np.clip(xs, xc[0], xc[-1]), np.clip(zs, zc[0], zc[-1])),
        axis=-1,
    )
    values = interpolator(points)
    return float(values) if values.ndim == 0 else values
