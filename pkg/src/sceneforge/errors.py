"""Exception types shared across the package."""


class SceneForgeError(Exception):
    """Base class for every error raised by this package."""


class EmptyInputError(SceneForgeError):
    """An operation received an empty cloud, batch, or token list."""


class WrongVariantError(SceneForgeError):
    """An axis-aligned-only operation was called with oriented boxes."""


class InvalidConfigError(SceneForgeError):
    """A configuration value is outside its legal range."""


class ParseError(SceneForgeError):
    """A file does not conform to its schema."""

    def __init__(self, message: str, *, path=None, field: str | None = None):
        self.path = path
        self.field = field
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


class MissingCategoryStatsError(SceneForgeError):
    """A seen category has zero instances to compute statistics from."""

    def __init__(self, missing: list[str]):
        self.missing = sorted(missing)
        super().__init__(
            "no instances found for seen categories: " + ", ".join(self.missing)
        )


class NoAnchorAvailableError(SceneForgeError):
    """The scene contains no seen-category object to anchor an insertion."""


class NoTargetAvailableError(SceneForgeError):
    """The asset bank has no asset outside the anchor category."""


class PlacementFailedError(SceneForgeError):
    """All placement candidates for one anchor/target pair were rejected."""


class AugmentationFailedError(SceneForgeError):
    """A scene augmentation run produced zero successful insertions."""


class InvalidExpressionError(SceneForgeError):
    """A referring expression is malformed or its span is out of range."""


class AmbiguousSpansError(SceneForgeError):
    """Two alignment targets claim partially overlapping token spans."""


class NotFoundError(SceneForgeError):
    """A referenced instance id does not exist in the scene."""


class NoPositivePairsError(SceneForgeError):
    """No anchor in the batch has a same-class positive sample."""
