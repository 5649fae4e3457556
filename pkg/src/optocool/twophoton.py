"""Frequency-indexed linear algebra for two-photon quadrature operators.

Every response is stored internally as a stack of small matrices with shape
``(N, rows, cols)`` (or ``(rows, cols)`` for frequency-constant objects), so
that composition is a plain batched ``matmul``:

=====================  ==========  ===============
type                   rows, cols  ``values`` shape
=====================  ==========  ===============
ScalarResponse         1, 1        (N,)
QuadratureVector       2, 1        (N, 2)
DualQuadratureVector   1, 2        (N, 2)
QuadratureMatrix       2, 2        (N, 2, 2)
=====================  ==========  ===============

Quadrature ordering is (amplitude q, phase p).
"""

import math

import numpy as np

__all__ = [
    "FrequencyGrid",
    "Response",
    "ScalarResponse",
    "QuadratureVector",
    "DualQuadratureVector",
    "QuadratureMatrix",
    "GridMismatchError",
    "DimensionError",
    "SingularityError",
    "make_grid",
    "make_rotation",
    "make_squeezer",
    "db_to_squeeze",
    "squeeze_to_db",
    "homodyne_dual",
    "identity",
    "zeros",
    "E_Q",
    "E_P",
]

SINGULAR_RTOL = 1e-14


class GridMismatchError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class SingularityError(ArithmeticError):
    """A per-frequency inverse failed.

    ``omega`` holds the first offending angular frequency (rad/s) or None for
    frequency-constant operators.
    """

    def __init__(self, message, omega=None):
        if omega is not None:
            message = f"{message} at omega = {omega:.6g} rad/s (f = {omega / (2 * np.pi):.6g} Hz)"
        super().__init__(message)
        self.omega = omega


class FrequencyGrid:
    """Strictly ascending angular frequencies in rad/s.

    ``f`` optionally keeps the Hz values the grid was built from, so that they
    are reported back without rounding drift.
    """

    def __init__(self, omega, f=None):
        omega = np.array(omega, dtype=float).ravel()
        if omega.size < 2:
            raise ValueError("frequency grid needs at least 2 points")
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
            raise ValueError("frequency grid entries must be finite and > 0")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        omega.flags.writeable = False
        self._omega = omega
        if f is not None:
            f = np.array(f, dtype=float).ravel()
            if f.shape != omega.shape or not np.allclose(2 * np.pi * f, omega, rtol=1e-14, atol=0):
                raise ValueError("f does not match omega")
            f.flags.writeable = False
        self._f = f

    @property
    def omega(self):
        return self._omega

    @property
    def f(self):
        if self._f is not None:
            return self._f
        return self._omega / (2 * np.pi)

    def __len__(self):
        return self._omega.size

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return len(self) == len(other) and np.array_equal(self._omega, other._omega)

    def __hash__(self):
        return hash((len(self), self._omega[0], self._omega[-1]))

    def __repr__(self):
        return f"FrequencyGrid({len(self)} points, {self.f[0]:.4g}-{self.f[-1]:.4g} Hz)"


def make_grid(f_min, f_max, n_points, spacing="log"):
    """Grid between ``f_min`` and ``f_max`` (Hz, endpoints included), stored in rad/s."""
    if not (f_min > 0 and f_max > 0):
        raise ValueError("grid bounds must be positive")
    if not f_min < f_max:
        raise ValueError(f"inverted grid bounds: f_min={f_min} >= f_max={f_max}")
    if int(n_points) != n_points or n_points < 2:
        raise ValueError("n_points must be an integer >= 2")
    n_points = int(n_points)
    if spacing == "log":
        f = np.geomspace(f_min, f_max, n_points)
    elif spacing == "linear":
        f = np.linspace(f_min, f_max, n_points)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    # pin endpoints exactly
    f[0], f[-1] = f_min, f_max
    return FrequencyGrid(2 * np.pi * f, f)


def _shape_kind(rows, cols):
    return {
        (1, 1): ScalarResponse,
        (2, 1): QuadratureVector,
        (1, 2): DualQuadratureVector,
        (2, 2): QuadratureMatrix,
    }[(rows, cols)]


def _common_grid(a, b):
    if a is None:
        return b
    if b is None or a is b or a == b:
        return a
    raise GridMismatchError(f"operands live on different grids: {a!r} vs {b!r}")


class Response:
    """Base class; see the module docstring for the storage layout."""

    _rows = None
    _cols = None

    def __init__(self, values, grid=None):
        mat = self._to_matrix(np.asarray(values))
        if not np.all(np.isfinite(mat)):
            raise ValueError(f"{type(self).__name__} has non-finite entries")
        if grid is not None:
            if not isinstance(grid, FrequencyGrid):
                raise TypeError("grid must be a FrequencyGrid or None")
            if mat.ndim == 2:
                mat = np.broadcast_to(mat, (len(grid),) + mat.shape).copy()
            elif mat.shape[0] != len(grid):
                raise ValueError(
                    f"{type(self).__name__}: {mat.shape[0]} values for a grid of {len(grid)}"
                )
        elif mat.ndim != 2:
            raise ValueError("frequency-dependent values need a grid")
        mat.flags.writeable = False
        self._mat = mat
        self._grid = grid

    @classmethod
    def _to_matrix(cls, v):
        raise NotImplementedError

    @classmethod
    def _from_matrix(cls, mat, grid):
        obj = object.__new__(_shape_kind(mat.shape[-2], mat.shape[-1]))
        if not np.all(np.isfinite(mat)):
            raise ValueError(f"{obj.__class__.__name__} has non-finite entries")
        mat = np.array(mat)
        mat.flags.writeable = False
        obj._mat = mat
        obj._grid = grid
        return obj

    @property
    def grid(self):
        return self._grid

    @property
    def matrix(self):
        """Read-only ``(N, rows, cols)`` or ``(rows, cols)`` view."""
        return self._mat

    @property
    def shape(self):
        return (self._rows, self._cols)

    @property
    def is_constant(self):
        return self._grid is None

    def on(self, grid):
        """Broadcast a frequency-constant response onto ``grid``."""
        if self._grid is not None:
            _common_grid(self._grid, grid)
            return self
        return Response._from_matrix(np.broadcast_to(self._mat, (len(grid),) + self._mat.shape), grid)

    # --- algebra -----------------------------------------------------------
    def __matmul__(self, other):
        if not isinstance(other, Response):
            return NotImplemented
        if self._cols != other._rows:
            raise DimensionError(
                f"cannot compose {type(self).__name__} with {type(other).__name__}"
            )
        grid = _common_grid(self._grid, other._grid)
        return Response._from_matrix(np.matmul(self._mat, other._mat), grid)

    def _coerce(self, other):
        if isinstance(other, Response):
            return other
        if np.isscalar(other) or (isinstance(other, np.ndarray) and other.ndim == 0):
            return ScalarResponse(complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.shape != self.shape:
            if isinstance(other, ScalarResponse) and self._rows == self._cols:
                other = other * identity(self._rows)
            else:
                raise DimensionError(f"cannot add {type(self).__name__} and {type(other).__name__}")
        grid = _common_grid(self._grid, other._grid)
        return Response._from_matrix(self._mat + other._mat, grid)

    __radd__ = __add__

    def __neg__(self):
        return Response._from_matrix(-self._mat, self._grid)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Scale by a number or (elementwise) by a ScalarResponse."""
        if isinstance(other, ScalarResponse):
            grid = _common_grid(self._grid, other._grid)
            return Response._from_matrix(self._mat * other._mat, grid)
        if isinstance(other, Response):
            return NotImplemented
        if np.isscalar(other):
            return Response._from_matrix(self._mat * other, self._grid)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScalarResponse):
            return self * other.inv()
        if np.isscalar(other):
            return self * (1.0 / other)
        return NotImplemented

    def adjoint(self):
        """Hermitian conjugate; swaps vectors and dual vectors."""
        return Response._from_matrix(np.conj(np.swapaxes(self._mat, -1, -2)), self._grid)

    @property
    def H(self):
        return self.adjoint()

    def norm2(self):
        """Per-frequency sum of squared magnitudes of all entries."""
        return ScalarResponse(np.sum(np.abs(self._mat) ** 2, axis=(-2, -1)), self._grid)

    def inv(self):
        """Per-frequency inverse of a scalar or 2x2 matrix."""
        if self._rows != self._cols:
            raise DimensionError(f"{type(self).__name__} is not invertible")
        if self._rows == 1:
            det = self._mat[..., 0, 0]
        else:
            det = np.linalg.det(self._mat)
        scale = np.sqrt(np.sum(np.abs(self._mat) ** 2, axis=(-2, -1)))
        bad = np.abs(det) <= SINGULAR_RTOL * np.maximum(scale, 1.0) ** self._rows
        if np.any(bad):
            omega = None
            if self._grid is not None:
                omega = float(self._grid.omega[np.argmax(np.atleast_1d(bad))])
            raise SingularityError(f"singular {type(self).__name__}", omega)
        if self._rows == 1:
            return Response._from_matrix(1.0 / self._mat, self._grid)
        return Response._from_matrix(np.linalg.inv(self._mat), self._grid)

    def allclose(self, other, rtol=1e-12, atol=0.0):
        if not isinstance(other, Response) or other.shape != self.shape:
            return False
        a, b = np.broadcast_arrays(self._mat, other._mat)
        return np.allclose(a, b, rtol=rtol, atol=atol)

    def __repr__(self):
        where = "constant" if self._grid is None else f"{len(self._grid)} points"
        return f"{type(self).__name__}({where})"


class ScalarResponse(Response):
    _rows, _cols = 1, 1

    @classmethod
    def _to_matrix(cls, v):
        return np.asarray(v)[..., None, None]

    @property
    def values(self):
        return self._mat[..., 0, 0]

    @property
    def real(self):
        return np.real(self.values)

    def __abs__(self):
        return ScalarResponse(np.abs(self.values), self._grid)

    def conj(self):
        return self.adjoint()


class QuadratureVector(Response):
    _rows, _cols = 2, 1

    @classmethod
    def _to_matrix(cls, v):
        if v.shape[-1:] != (2,):
            raise DimensionError("quadrature vector values must end in a length-2 axis")
        return v[..., :, None]

    @property
    def values(self):
        return self._mat[..., :, 0]

    @property
    def q(self):
        return ScalarResponse(self.values[..., 0], self._grid)

    @property
    def p(self):
        return ScalarResponse(self.values[..., 1], self._grid)


class DualQuadratureVector(Response):
    _rows, _cols = 1, 2

    @classmethod
    def _to_matrix(cls, v):
        if v.shape[-1:] != (2,):
            raise DimensionError("dual vector values must end in a length-2 axis")
        return v[..., None, :]

    @property
    def values(self):
        return self._mat[..., 0, :]

    @property
    def q(self):
        return ScalarResponse(self.values[..., 0], self._grid)

    @property
    def p(self):
        return ScalarResponse(self.values[..., 1], self._grid)


class QuadratureMatrix(Response):
    _rows, _cols = 2, 2

    @classmethod
    def _to_matrix(cls, v):
        if v.shape[-2:] != (2, 2):
            raise DimensionError("quadrature matrix values must end in a 2x2 block")
        return v

    @property
    def values(self):
        return self._mat

    def det(self):
        return ScalarResponse(np.linalg.det(self._mat), self._grid)


E_Q = QuadratureVector(np.array([1.0, 0.0]))
E_P = QuadratureVector(np.array([0.0, 1.0]))


def identity(dim=2, grid=None):
    if dim == 1:
        return ScalarResponse(np.ones(len(grid)) if grid else 1.0, grid)
    m = np.eye(2)
    return QuadratureMatrix(m if grid is None else np.broadcast_to(m, (len(grid), 2, 2)), grid)


def zeros(rows, cols, grid=None):
    mat = np.zeros((rows, cols) if grid is None else (len(grid), rows, cols), dtype=complex)
    return Response._from_matrix(mat, grid)


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def make_rotation(phi):
    """Quadrature rotation R(phi) = [[cos, -sin], [sin, cos]]."""
    _check_finite("phi", phi)
    c, s = math.cos(phi), math.sin(phi)
    return QuadratureMatrix(np.array([[c, -s], [s, c]]))


def make_squeezer(r):
    """Squeeze matrix diag(e^{+r}, e^{-r}); positive r squeezes the phase quadrature."""
    _check_finite("r", r)
    return QuadratureMatrix(np.diag([math.exp(r), math.exp(-r)]))


def db_to_squeeze(level_db):
    """d dB of squeezing means e^{-2r} = 10^{-d/10}."""
    return level_db * math.log(10) / 20


def squeeze_to_db(r):
    return r * 20 / math.log(10)


def homodyne_dual(zeta):
    """Local-oscillator dual vector v^dagger = [sin zeta, cos zeta]; zeta=0 reads phase."""
    _check_finite("zeta", zeta)
    return DualQuadratureVector(np.array([math.sin(zeta), math.cos(zeta)]))
