"""Exception types shared across the toolkit.

Diagnostics that point at source carry (path, line, col) and format as
``path:line:col: message`` so shell tooling can jump to the site.
"""

from __future__ import annotations


class RtlmutError(Exception):
    """Base class for all toolkit errors."""


class SourceError(RtlmutError):
    """An error anchored to a source location."""

    def __init__(self, message: str, path: str = "<input>", line: int = 0, col: int = 0):
        self.message = message
        self.path = path
        self.line = line
        self.col = col
        super().__init__(f"{path}:{line}:{col}: {message}")


class ParseError(SourceError):
    """Subset violation or malformed input; carries the expected-token set."""

    def __init__(self, message, path="<input>", line=0, col=0, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, path, line, col)


class UnsupportedConstructError(SourceError):
    """Recognized Verilog feature that is outside the supported subset."""

    def __init__(self, construct, path="<input>", line=0, col=0):
        self.construct = construct
        super().__init__(f"unsupported construct: {construct}", path, line, col)


class ElaborationError(RtlmutError):
    pass


class UnresolvedModuleError(ElaborationError):
    def __init__(self, name: str, site: str = ""):
        self.name = name
        super().__init__(f"instantiated module '{name}' is not declared" + (f" ({site})" if site else ""))


class ParameterNotConstantError(ElaborationError):
    def __init__(self, site: str):
        self.site = site
        super().__init__(f"parameter value is not constant-evaluable at {site}")


class CyclicHierarchyError(ElaborationError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"module hierarchy is cyclic through {path}")


class MultipleTopCandidatesError(ElaborationError):
    def __init__(self, candidates):
        self.candidates = tuple(candidates)
        super().__init__(f"top module is ambiguous: {', '.join(self.candidates)}")


class UnknownSpecSignalError(ElaborationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"spec signal '{name}' does not exist at the top level")


class NoLogicDriverError(ElaborationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"signal '{name}' traces back to a primary input; no logic driver")


class HierarchyMismatchError(RtlmutError):
    def __init__(self, detail: str):
        super().__init__(f"module sets differ: {detail}")


class SimError(RtlmutError):
    pass


class CombinationalLoopError(SimError):
    def __init__(self, cycle_path):
        self.cycle_path = tuple(cycle_path)
        super().__init__("combinational loop: " + " -> ".join(self.cycle_path))


class UnsupportedForSimError(SimError):
    def __init__(self, construct: str):
        self.construct = construct
        super().__init__(f"construct not supported by the cycle simulator: {construct}")


class WidthMismatchError(SimError):
    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"stimulus width mismatch on input '{name}'" + (f": {detail}" if detail else ""))


class ShapeMismatchError(SimError):
    def __init__(self, detail: str):
        super().__init__(f"traces are not comparable: {detail}")


class SimulationFailureError(SimError):
    def __init__(self, site: str, detail: str = ""):
        self.site = site
        super().__init__(f"simulation failed at {site}" + (f": {detail}" if detail else ""))


class PipelineError(RtlmutError):
    pass


class InfeasibleAtApplyError(PipelineError):
    """The tree changed between probe and apply; signals a pipeline bug."""


class OverlappingEditsError(PipelineError):
    def __init__(self, first, second):
        self.pair = (first, second)
        super().__init__(f"edit sites overlap: {first} and {second}")


class EvalError(RtlmutError):
    pass


class UnknownSignalError(EvalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"property references unknown signal '{name}'")


class TraceTooShortError(EvalError):
    def __init__(self, needed: int, got: int):
        self.needed = needed
        self.got = got
        super().__init__(f"trace has {got} cycles but the property needs {needed}")


class RunCountMismatchError(EvalError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} assertion runs, got {got}")


class MissingManifestError(EvalError):
    def __init__(self, path):
        super().__init__(f"manifest not found: {path}")


class MissingAssertionRunsError(EvalError):
    def __init__(self, path):
        super().__init__(f"assertion run directories not found under: {path}")


class MissingMergedVariantError(EvalError):
    def __init__(self, detail: str = "manifest has no merged five-bug entry"):
        super().__init__(detail)
