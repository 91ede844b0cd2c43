"""Exception hierarchy. Every error the package raises derives from GaitError."""


class GaitError(Exception):
    pass


class EmptySilhouette(GaitError, ValueError):
    pass


class DegenerateBox(GaitError, ValueError):
    pass


class ShapeMismatch(GaitError, ValueError):
    pass


class EmptyWindow(GaitError, ValueError):
    pass


class EvenWindow(GaitError, ValueError):
    pass


class MissingView(GaitError, KeyError):
    def __init__(self, view, detail=""):
        self.view = view
        msg = f"no data for view {view}"
        super().__init__(f"{msg}: {detail}" if detail else msg)

    def __str__(self):
        return self.args[0]


class UnknownView(GaitError, KeyError):
    def __str__(self):
        return self.args[0] if self.args else "unknown view"


class SingleClass(GaitError, ValueError):
    pass


class DimensionMismatch(GaitError, ValueError):
    pass


class InsufficientSubjects(GaitError, ValueError):
    pass


class MissingManifest(GaitError, FileNotFoundError):
    pass


class UnknownGender(GaitError, ValueError):
    pass


class CorruptImage(GaitError, ValueError):
    pass


class FrameOrderError(GaitError, ValueError):
    pass


class VersionMismatch(GaitError, ValueError):
    pass


class ChecksumMismatch(GaitError, ValueError):
    pass


class ShapeInconsistency(GaitError, ValueError):
    pass
