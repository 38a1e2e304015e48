"""Canonical Lindblad-type form of time-local master equations and
non-Markovianity measures built on the canonical decoherence rates."""

__version__ = "0.1.0"

from .basis import OperatorBasis, build_basis, hs_inner, unvec, vec
from .canonical import (CanonicalForm, assemble, canonicalize,
                        compare_canonical)
from .dynamics import (InvertibilityReport, MapFamily, MemoryKernelSpec,
                       generator_from_maps, invertibility_report,
                       propagate_memory_kernel)
from .eig import EigenDecomposition, hermitian_eig
from .generator import (GeneratorTerms, LindbladTerms, change_picture,
                        extract_c, split, transfer_from_lindblad,
                        transfer_from_terms)
from .measures import (MeasureReport, RateSeries, F_of, canonical_series,
                       f_of, measure_report, nm_index,
                       single_channel_equivalents)
from .policy import NumericPolicy
