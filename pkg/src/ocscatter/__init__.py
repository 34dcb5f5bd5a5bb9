"""One-dimensional scattering on compact barriers, with the split of a
left-incident process into transmission and reflection subprocesses."""

__version__ = "0.1.0"

from .potential import Delta, PotentialSpec, Segment, UnitsConfig, make_spec  # noqa: E402
from .transfer import barrier_transfer_matrix, scattering_params, spectrum  # noqa: E402
from .decomposition import decompose, find_xc, subprocess_amplitudes  # noqa: E402
from .wavepacket import PacketSynthesizer, gaussian_amplitude  # noqa: E402

__all__ = [
    "Delta", "PacketSynthesizer", "PotentialSpec", "Segment", "UnitsConfig",
    "barrier_transfer_matrix", "decompose", "find_xc", "gaussian_amplitude", "make_spec",
    "scattering_params", "spectrum", "subprocess_amplitudes",
]
