"""Exception types shared across the toolkit."""


class ScengenError(Exception):
    """Base class for all toolkit errors."""


class InputError(ScengenError):
    """Invalid input: bad symbols, malformed files, incompatible shapes."""


class AlphabetMismatchError(InputError):
    """Two models, or a model and a dataset, disagree on the alphabet size."""


class TransitionError(InputError):
    """Illegal fail/repair action for the current system state."""


class PosteriorUndefinedError(ScengenError):
    """Posterior requested for a sequence the model assigns zero probability."""


class GradientUndefinedError(ScengenError):
    """Gradient requested at a point where the loss is not finite."""


class StepFailureError(ScengenError):
    """A manifold update step could not be completed."""


class TrainingError(ScengenError):
    """Training aborted; the message carries the diagnostic trace."""


class ResourceLimitError(ScengenError):
    """Scenario enumeration bounds exceeded."""


class DatasetConstructionError(ScengenError):
    """Scenario enumeration produced an unusable (empty) class."""
