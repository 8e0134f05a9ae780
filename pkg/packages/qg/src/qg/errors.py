class QgError(Exception): ...


class DomainError(QgError, ValueError): ...


class DegenerateError(QgError): ...


class TransitionPointError(DegenerateError): ...


class CoefficientSingularityError(DegenerateError): ...


class UndefinedCfimError(DegenerateError): ...


class InconsistencyError(QgError): ...


class StepTooLargeError(QgError): ...
