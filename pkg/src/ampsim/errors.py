"""Exception hierarchy shared across the package.

Every domain failure raises a subclass of :class:`AmpsimError` so callers
(and the CLI exit-code mapping) can distinguish domain errors from bugs.
"""


class AmpsimError(Exception):
    """Base class for all library errors."""


# --- linear algebra ---------------------------------------------------------

class DimensionMismatch(AmpsimError):
    """Vector/matrix shapes are incompatible."""


class RankDeficient(AmpsimError):
    """Design matrix columns are numerically collinear."""


class DegenerateTreatment(AmpsimError):
    """Treatment variation is fully absorbed by the controls."""


class ConstantTreatment(AmpsimError):
    """Treatment has no variation around its mean."""


# --- structural model -------------------------------------------------------

class ParseError(AmpsimError):
    """Model spec document is malformed."""


class CycleError(AmpsimError):
    """Edges do not form a DAG."""


class UnknownNode(AmpsimError):
    """An edge or query references a node that does not exist."""


class InfeasibleVariance(AmpsimError):
    """A variance target would require a negative error variance."""


class UnresolvedErrorVariance(AmpsimError):
    """Operation requires all error variances to be solved first."""


class SingularRegressorCovariance(AmpsimError):
    """Population covariance of the requested regressors is singular."""


class InfeasibleIntervention(AmpsimError):
    """Fixed-variance intervention value lies outside the feasible interval."""


# --- simulation -------------------------------------------------------------

class NTooSmall(AmpsimError):
    """Sample size below the minimum supported."""


class OutOfRange(AmpsimError):
    """Numeric parameter outside its valid domain."""


# --- estimation -------------------------------------------------------------

class UnknownColumn(AmpsimError):
    """Dataset does not contain a referenced column."""


class InfeasibleEstimator(AmpsimError):
    """Estimator references an unobserved column in feasible-only mode."""


# --- experiments ------------------------------------------------------------

class MismatchedReplicates(AmpsimError):
    """Reports being compared do not share replicate structure."""


# --- latent-probit pipeline -------------------------------------------------

class SingularBlock(AmpsimError):
    """Conditioning block of the joint covariance is singular."""


class NotPSD(AmpsimError):
    """Conditional covariance has a meaningfully negative eigenvalue."""


class InfeasibleConfig(AmpsimError):
    """Pipeline configuration violates the unit-latent-variance budget."""
