"""Channel polarization for two-dimensional-input quantum symmetric channels."""

from .btpm import (Btpm, NoBtpm, QqscCanonicalForm, SymmetryClass, SymmetryTag, channel_kraus, classify,
                   extract_btpm, kraus_from_btpm, qqsc_canonical_form)
from .channels import ChannelSpec, bitflip, identity, load_spec, parse_spec, phaseflip
from .coherent import (CoherentInfoResult, coherent_information, entropy_exchange, mslci_sweep,
                       uniform_coherent_information)
from .polarize import (ClassicalBinaryChannel, GeneratorMatrix, PolarizationReport, combined_channel_btpm,
                       coordinate_btpm_from_classical, coordinate_channel, coordinate_mslci, encode,
                       generator_matrix, polar_step_minus, polar_step_plus, polarization_report,
                       shannon_capacity_uniform)
from .quantum import (KrausSet, apply_kraus, partial_trace, purify, tensor_product, von_neumann_entropy)

__version__ = "0.1.0"
