"""Multi-photon fusion, heralding and metro-network distribution simulator."""

from .fock import (
    H,
    V,
    Polarization,
    ProjectionSpec,
    PureState,
    SlotKey,
    apply_coupler,
    create,
    inner_product,
    project,
    superpose,
    tensor,
    vacuum,
)
from .optics import LCVR, PBS, BeamSplitter, Circuit, DelayLine, Rotation, WavepacketModel, run_circuit
from .protocol import HeraldClass, bell_fringe, fuse, herald, hom_dip, projection_spectrum, splitter_tree_success
from .source import SpdcSpec, dual_pair, singlet_pair

__version__ = "0.1.0"
