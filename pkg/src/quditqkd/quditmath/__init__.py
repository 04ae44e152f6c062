"""State algebra, Fourier bases, finite fields and MUB construction."""

from .field import FieldElement, GaloisField, finite_field, is_irreducible, is_prime, prime_power
from .mubs import MAX_DIM, complete_mub_bases, mub_set, supports_full_set
from .states import (
    Basis,
    BasisSet,
    StateVector,
    born_probabilities,
    born_sample,
    computational_basis,
    dqft_basis,
    dqft_matrix,
    fidelity,
    inner_product,
    sample_from_probabilities,
)

__all__ = [
    "Basis",
    "BasisSet",
    "FieldElement",
    "GaloisField",
    "MAX_DIM",
    "StateVector",
    "born_probabilities",
    "born_sample",
    "complete_mub_bases",
    "computational_basis",
    "dqft_basis",
    "dqft_matrix",
    "fidelity",
    "finite_field",
    "inner_product",
    "is_irreducible",
    "is_prime",
    "mub_set",
    "prime_power",
    "sample_from_probabilities",
    "supports_full_set",
]
