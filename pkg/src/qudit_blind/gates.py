"""Dense unitary constructors for finite-field and integer-ring qudit gates.

All matrices are indexed [out, in].  Two-qudit gates act on the basis
|u>|v> stored at index u*d + v.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .galois import Field, FieldElement, FieldError, galois_ring, ring_char_exponent

ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class Gate:
    matrix: np.ndarray
    arity: int
    d: int
    label: str = ""
    params: dict = dc_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Gate") -> "Gate":
        if self.arity != other.arity or self.d != other.d:
            raise ValueError("gate shapes differ")
        return Gate(self.matrix @ other.matrix, self.arity, self.d, f"{self.label}*{other.label}")

    def dagger(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.arity, self.d, f"{self.label}^dag")

    def is_unitary(self, tol: float = ATOL) -> bool:
        eye = np.eye(self.dim)
        return bool(np.max(np.abs(self.matrix.conj().T @ self.matrix - eye)) <= tol)

    def to_json(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {
            "label": self.label,
            "arity": self.arity,
            "d": self.d,
            "entries": [[float(c.real), float(c.imag)] for c in flat],
        }


def _el(F: Field, a) -> int:
    if isinstance(a, FieldElement):
        return a.index
    if isinstance(a, (tuple, list)):
        return F.index(a)
    a = int(a)
    if not 0 <= a < F.d:
        raise FieldError(f"element index {a} out of range for d={F.d}")
    return a


def omega(n: int, k) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(k) / n)


def tensor(*gates: Gate) -> Gate:
    mat = gates[0].matrix
    for g in gates[1:]:
        mat = np.kron(mat, g.matrix)
    return Gate(mat, sum(g.arity for g in gates), gates[0].d, "(x)".join(g.label for g in gates))


def identity(F: Field, arity: int = 1) -> Gate:
    return Gate(np.eye(F.d**arity, dtype=complex), arity, F.d, "I")


# -- Pauli group ------------------------------------------------------------


def shift(x, F: Field) -> Gate:
    x = _el(F, x)
    mat = np.zeros((F.d, F.d), dtype=complex)
    mat[F.add_table[:, x], np.arange(F.d)] = 1
    return Gate(mat, 1, F.d, f"X({x})")


def clock(z, F: Field) -> Gate:
    z = _el(F, z)
    return Gate(np.diag(omega(F.p, F.chi_exponent_table[z])), 1, F.d, f"Z({z})")


def pauli(x, z, F: Field) -> Gate:
    """Z(z) X(x)."""
    x, z = _el(F, x), _el(F, z)
    mat = clock(z, F).matrix @ shift(x, F).matrix
    return Gate(mat, 1, F.d, f"Z({z})X({x})", {"x": x, "z": z})


def pauli_string(xs, zs, F: Field) -> Gate:
    return tensor(*[pauli(x, z, F) for x, z in zip(xs, zs)])


# -- Clifford generators -------------------------------------------------------


def hadamard(F: Field) -> Gate:
    mat = omega(F.p, F.chi_exponent_table) / np.sqrt(F.d)
    return Gate(mat, 1, F.d, "H")


def mult_gate(lam, F: Field) -> Gate:
    lam = _el(F, lam)
    if lam == 0:
        raise FieldError("M(0) is not invertible")
    mat = np.zeros((F.d, F.d), dtype=complex)
    mat[F.mul_table[lam], np.arange(F.d)] = 1
    return Gate(mat, 1, F.d, f"M({lam})", {"lam": lam})


def angle_grid_size(F: Field) -> int:
    """Order of the root of unity whose powers form the hiding angle set."""
    if F.p == 2:
        return 8
    if F.p == 3:
        return 9
    return F.p


def grid_to_angles(k, F: Field) -> np.ndarray:
    return 2 * np.pi * (np.asarray(k) % angle_grid_size(F)) / angle_grid_size(F)


def even_sqrt(lam: int, F: Field) -> int:
    """l with l^2 = lam in characteristic 2."""
    l = F.sqrt(lam)
    if F.mul_table[l, l] != lam:  # pragma: no cover - Frobenius is bijective
        raise FieldError(f"square root search failed for {lam}")
    return l


def phase_grid(lam, F: Field) -> np.ndarray:
    """Phases of S(lam) as integer multiples of 2*pi/angle_grid_size."""
    lam = _el(F, lam)
    N = angle_grid_size(F)
    if F.p == 2:
        # M(l^-1) S M(l): entry u picks up chi_4(lift(l u)^2)
        l = even_sqrt(lam, F)
        exps = [ring_char_exponent(F.element(int(F.mul_table[l, u])), F, 2, power=2) for u in range(F.d)]
        return (np.array(exps, dtype=np.int64) * (N // 4)) % N
    half = pow(2, -1, F.p)
    arg = F.mul_table[F.from_int(half), F.mul_table[lam, F.mul_table[np.arange(F.d), np.arange(F.d)]]]
    return (F.trace_table[arg] * (N // F.p)) % N


def phase(lam, F: Field) -> Gate:
    """S(lam); for p = 2 the substitute M(l^-1) S M(l) with l^2 = lam."""
    lam = _el(F, lam)
    mat = np.diag(np.exp(1j * grid_to_angles(phase_grid(lam, F), F)))
    label = f"S({lam})" if F.p != 2 else f"M(l^-1)SM(l)[{lam}]"
    return Gate(mat, 1, F.d, label, {"lam": lam})


def phase_s(F: Field) -> Gate:
    """The parameter-free S, i.e. phase(1)."""
    return phase(1, F)


def decompose_mult(lam, F: Field) -> list[Gate]:
    """[H, S(lam), H, S(lam^-1), H, S(lam)], whose ordered product is M(lam) up to phase."""
    lam = _el(F, lam)
    if lam == 0:
        raise FieldError("M(0) is not invertible")
    inv = int(F.inv_table[lam])
    H = hadamard(F)
    return [H, phase(lam, F), H, phase(inv, F), H, phase(lam, F)]


def product(gates: list[Gate]) -> Gate:
    mat = gates[0].matrix
    for g in gates[1:]:
        mat = mat @ g.matrix
    return Gate(mat, gates[0].arity, gates[0].d, "*".join(g.label for g in gates))


def cz(F: Field, power: int = 1) -> Gate:
    power = int(power) % F.p
    exps = (power * F.chi_exponent_table).reshape(-1)
    return Gate(np.diag(omega(F.p, exps)), 2, F.d, f"CZ^{power}", {"power": power})


def ge_gate(N, F: Field) -> Gate:
    """M(N^-1)_2 CZ M(N)_2, diagonal with entries chi(N u v)."""
    N = _el(F, N)
    if N == 0:
        raise FieldError("GE(0) is not an entangler")
    exps = F.chi_exponent_table[:, F.mul_table[N]].reshape(-1)
    return Gate(np.diag(omega(F.p, exps)), 2, F.d, f"GE({N})", {"N": N})


def diag_gate(angles) -> Gate:
    angles = np.asarray(angles, dtype=float)
    return Gate(np.diag(np.exp(1j * angles)), 1, len(angles), "D")


def diag_angles(G: Gate) -> np.ndarray:
    """Angles of a diagonal single-qudit gate, normalized to entry 0 = 0."""
    diag = np.diag(G.matrix)
    return np.mod(np.angle(diag / diag[0]), 2 * np.pi)


def t_grid(F: Field) -> np.ndarray:
    """Phases of the generalized T gate on the angle grid."""
    N = angle_grid_size(F)
    if F.p == 2:
        exps = [ring_char_exponent(F.element(k), F, 3, power=4) for k in range(F.d)]
        return np.array(exps, dtype=np.int64) % N
    if F.p == 3:
        exps = [ring_char_exponent(F.element(k), F, 2, power=3) for k in range(F.d)]
        return np.array(exps, dtype=np.int64) % N
    sixth = F.from_int(pow(6, -1, F.p))
    cubes = F.mul_table[F.mul_table[np.arange(F.d), np.arange(F.d)], np.arange(F.d)]
    return F.trace_table[F.mul_table[sixth, cubes]] % N


def t_gate(F: Field) -> Gate:
    return Gate(np.diag(np.exp(1j * grid_to_angles(t_grid(F), F))), 1, F.d, "T")


def t_conjugation_closed_form(x, F: Field, corrected: bool = False) -> Gate:
    """The non-Pauli factor predicted for T X(x) T^dag, without its scalar phase.

    For p = 2 the usual literal form X(x) M(x^-1) S M(x) Z(x) assumes u^3 = u, which
    only holds in GF(2).  With ``corrected`` the missing diagonal factor
    chi(u^3 x + u x^3) (u the pre-shift label) is included, valid for all m.
    """
    x = _el(F, x)
    X = shift(x, F).matrix
    if F.p == 2:
        inv = int(F.inv_table[x])
        S = phase_s(F).matrix
        mid = mult_gate(inv, F).matrix @ S @ mult_gate(x, F).matrix
        mat = X @ mid @ clock(x, F).matrix
        if corrected:
            mt, u = F.mul_table, np.arange(F.d)
            cube = lambda a: mt[mt[a, a], a]
            extra = F.trace_table[F.add_table[mt[cube(u), x], mt[u, cube(x)]]]
            mat = X @ np.diag((-1.0) ** extra) @ mid @ clock(x, F).matrix
    elif F.p == 3:
        two_x = F.mul_table[F.from_int(2), x]
        mat = X @ phase(two_x, F).matrix @ clock(F.mul_table[x, x], F).matrix
    else:
        half = F.from_int(pow(2, -1, F.p))
        mat = X @ phase(x, F).matrix @ clock(F.mul_table[half, F.mul_table[x, x]], F).matrix
    return Gate(mat, 1, F.d, f"T-conj-closed({x})")


# -- integer-ring gates ----------------------------------------------------------


def ring_gate(name: str, d: int) -> Gate:
    if d < 2:
        raise ValueError("ring dimension must be >= 2")
    j = np.arange(d)
    if name == "X":
        mat = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    elif name == "Z":
        mat = np.diag(omega(d, j))
    elif name == "H":
        mat = omega(d, np.outer(j, j) % d) / np.sqrt(d)
    elif name == "S":
        tau = (-1) ** d * np.exp(1j * np.pi / d)
        mat = np.diag(tau ** (j * j))
    elif name == "CZ":
        mat = np.diag(omega(d, np.outer(j, j).reshape(-1) % d))
        return Gate(mat, 2, d, "CZ_d")
    else:
        raise ValueError(f"unknown ring gate {name!r}")
    return Gate(mat, 1, d, f"{name}_d")


# -- comparison and classification ------------------------------------------------


def equal_up_to_phase(A, B, tol: float = ATOL) -> bool:
    """Compare after normalizing by the first nonzero entry of the reference B."""
    A = A.matrix if isinstance(A, Gate) else np.asarray(A)
    B = B.matrix if isinstance(B, Gate) else np.asarray(B)
    if A.shape != B.shape:
        return False
    flat_b, flat_a = B.reshape(-1), A.reshape(-1)
    nz = np.flatnonzero(np.abs(flat_b) > 1e-8)
    if nz.size == 0:
        return bool(np.max(np.abs(flat_a)) <= tol)
    i = nz[0]
    if abs(flat_a[i]) < 1e-12:
        return False
    ph = flat_b[i] / flat_a[i]
    ph /= abs(ph)
    return bool(np.max(np.abs(A * ph - B)) <= tol)


def identify_pauli_string(G, F: Field, n: int, tol: float = ATOL):
    """Return (xs, zs, phase) with G = phase * (x) Z(z_i)X(x_i), or None."""
    mat = G.matrix if isinstance(G, Gate) else np.asarray(G)
    d = F.d
    col = mat[:, 0]
    row = int(np.argmax(np.abs(col)))
    if abs(abs(col[row]) - 1) > tol:
        return None
    xs = []
    r = row
    for _ in range(n):
        r, digit = divmod(r, d)
        xs.append(digit)
    xs = xs[::-1]
    shift_n = tensor(*[shift(x, F) for x in xs]).matrix
    rest = shift_n.conj().T @ mat  # should be phase * Z(z)
    if np.max(np.abs(rest - np.diag(np.diag(rest)))) > tol:
        return None
    diag = np.diag(rest)
    ph = diag[0]
    # Z(z) entries at basis vector with single 1 at factor i and value u reveal z_i
    zs = []
    for i in range(n):
        stride = d ** (n - 1 - i)
        found = None
        for z in range(d):
            want = omega(F.p, F.chi_exponent_table[z])
            if np.max(np.abs(diag[np.arange(d) * stride] - ph * want)) <= tol:
                found = z
                break
        if found is None:
            return None
        zs.append(found)
    P = pauli_string(xs, zs, F).matrix
    ph = (P.conj().T @ mat)[0, 0]
    if np.max(np.abs(ph * P - mat)) > tol:
        return None
    return tuple(xs), tuple(zs), complex(ph)


def is_pauli_up_to_phase(G, F: Field, tol: float = ATOL):
    """(x, z, phase) if G = phase * Z(z)X(x); otherwise None."""
    res = identify_pauli_string(G, F, 1, tol)
    if res is None:
        return None
    xs, zs, ph = res
    return xs[0], zs[0], ph


def prime_basis(F: Field) -> list[int]:
    """A Z_p basis of F: the elements xi^i."""
    return [F.index([1 if j == i else 0 for j in range(F.m)]) for i in range(F.m)]


def is_clifford(G, F: Field, n: int | None = None, tol: float = 1e-9) -> bool:
    """Conjugate X(b) and Z(b) on every factor over a Z_p basis; all images must be Pauli."""
    mat = G.matrix if isinstance(G, Gate) else np.asarray(G)
    if n is None:
        n = int(round(np.log(mat.shape[0]) / np.log(F.d)))
    for i, b in itertools.product(range(n), prime_basis(F)):
        for xs, zs in (
            ([b if j == i else 0 for j in range(n)], [0] * n),
            ([0] * n, [b if j == i else 0 for j in range(n)]),
        ):
            P = pauli_string(xs, zs, F).matrix
            if identify_pauli_string(mat @ P @ mat.conj().T, F, n, tol) is None:
                return False
    return True
