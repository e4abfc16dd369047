"""
Complex matrix kernel.

Gaussian sampling, Haar-random unitaries and log-determinants of
identity-plus-Gram matrices. Matrices are plain complex128 numpy arrays.

Sampling convention: CN(0, 1) has real and imaginary parts each N(0, 1/2),
so |phi* h|^2 for a unit beam phi is Exponential with mean 1.
All logarithms are natural.

Author: DuplexSched Project
"""

import numpy as np
from scipy.linalg import LinAlgError, cholesky, qr

from utils.errors import NumericalError

ComplexMatrix = np.ndarray


def sample_gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> ComplexMatrix:
    """
    Draw a rows x cols matrix of i.i.d. CN(0, 1) entries.

    Args:
        rows (int): Number of rows (>= 1)
        cols (int): Number of columns (>= 1)
        rng (np.random.Generator): Random stream owned by the caller

    Returns:
        np.ndarray: Complex matrix of shape (rows, cols)
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    real = rng.standard_normal((rows, cols))
    imag = rng.standard_normal((rows, cols))
    return (real + 1j * imag) / np.sqrt(2.0)


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """
    Draw a dim x dim unitary from the Haar measure.

    QR-factorizes a Ginibre matrix and multiplies each column of Q by the
    phase of the matching diagonal entry of R. Without the phase fix the
    distribution is not Haar.

    Args:
        dim (int): Matrix dimension (>= 1)
        rng (np.random.Generator): Random stream owned by the caller

    Returns:
        np.ndarray: Unitary matrix of shape (dim, dim)
    """
    z = sample_gaussian_matrix(dim, dim, rng)
    q, r = qr(z)
    d = np.diag(r)
    phases = d / np.abs(d)
    return q * phases


def logdet_id_plus_gram(A: ComplexMatrix, c: float) -> float:
    """
    Natural log-determinant of I + c * A A*.

    The Hermitian matrix is formed explicitly and factorized with Cholesky;
    log|I + cAA*| = 2 * sum(log diag(L)).

    Args:
        A (np.ndarray): Complex matrix of shape (rows, cols)
        c (float): Nonnegative scale

    Returns:
        float: Log-determinant in nats
    """
    if c < 0:
        raise ValueError(f"scale must be nonnegative, got {c}")
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    gram = np.eye(A.shape[0], dtype=complex) + c * (A @ A.conj().T)
    if not np.all(np.isfinite(gram)):
        raise NumericalError("identity-plus-Gram matrix has non-finite entries")
    try:
        L = cholesky(gram, lower=True)
    except LinAlgError as e:
        raise NumericalError(f"identity-plus-Gram matrix is not positive definite: {e}") from e
    return float(2.0 * np.sum(np.log(np.real(np.diag(L)))))


def batched_logdet_id_plus_gram(grams: np.ndarray, c: float) -> np.ndarray:
    """
    Log-determinants of I + c * G for a stack of Hermitian PSD matrices G.

    Used where thousands of small Gram matrices are evaluated at once
    (MAC-M subset enumeration). By Sylvester's identity
    log|I + c A A*| = log|I + c A* A|, so callers may pass either Gram.

    Args:
        grams (np.ndarray): Array of shape (batch, d, d)
        c (float): Nonnegative scale

    Returns:
        np.ndarray: Log-determinants of shape (batch,)
    """
    if c < 0:
        raise ValueError(f"scale must be nonnegative, got {c}")
    d = grams.shape[-1]
    stack = np.eye(d, dtype=complex) + c * grams
    if not np.all(np.isfinite(stack)):
        raise NumericalError("identity-plus-Gram stack has non-finite entries")
    try:
        L = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"identity-plus-Gram stack is not positive definite: {e}") from e
    diag = np.real(np.diagonal(L, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log(diag), axis=-1)
