"""Locally constrained inverse mean curvature flow of axisymmetric spacelike graphs in de Sitter space."""
from .axigraph import GeometryFrame, RadialProfile, frame, legendre_profile, slice_profile
from .errors import (ConfigError, DomainError, DsflowError, MeanConvexityLost, NotConvex, SpacelikeBreached,
                     StepUnderflow)
from .flowcore import FlowConfig, FlowTrace, Status, run
from .functionals import FunctionalRecord, minkowski_gap, record
from .spaceform import WarpModel, de_sitter, hyperbolic, slice_data

__version__ = "0.1.0"
