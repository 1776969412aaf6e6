"""Error hierarchy. ``code`` names the failure kind callers and tests match on."""


class EpilogError(Exception):
    code = 'Error'

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DslError(EpilogError):
    """Model/defaults text failed to compile into a ModelSpec."""

    code = 'InvalidModel'

    def __init__(self, message, diagnostics=(), code=None):
        super().__init__(message, code)
        self.diagnostics = list(diagnostics)


class PopulationDataError(EpilogError):
    code = 'MalformedRow'


class GroundingError(EpilogError):
    code = 'EmptyPopulation'


class SimulationError(EpilogError):
    code = 'TooLarge'


class ReportError(EpilogError):
    code = 'EmptyInput'
