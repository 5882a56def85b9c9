"""Exception types shared across the pipeline."""


class CurbFuseError(Exception):
    """Base class for all library errors."""


class FrameError(CurbFuseError):
    """Reference-frame mismatch between a transform and its operand."""


class ConfigError(CurbFuseError):
    """Invalid or inconsistent configuration (bad keys, dimension mismatch)."""


class DegenerateInput(CurbFuseError):
    """Geometric degeneracy: coplanar tetrahedron, undefined principal axis,
    point at the optical center, underdetermined fit."""


class EmptySubgraph(CurbFuseError):
    """Every tetrahedron was removed by the circumradius filter."""


class NoPath(CurbFuseError):
    """Medial-axis endpoints lie in disconnected Voronoi components."""


class NoConsensus(CurbFuseError):
    """No RANSAC model reached the minimum consensus fraction."""


class EmptyInput(CurbFuseError):
    """A metric was asked to score an empty point set."""


class PoseGapError(CurbFuseError):
    """Nearest pose record is further from the query timestamp than allowed."""
