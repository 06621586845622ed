"""Exception hierarchy shared across the package.

The CLI maps each family onto an exit code: usage/config problems exit 1,
data problems exit 2, numeric failures exit 3.
"""


class CascadeError(Exception):
    exit_code = 1


class ConfigError(CascadeError):
    exit_code = 1


class DataError(CascadeError, ValueError):
    exit_code = 2


class NumericError(CascadeError, ArithmeticError):
    exit_code = 3


class TrainingDiverged(NumericError):
    def __init__(self, epoch, step, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step
        self.loss = loss


class GradCheckError(NumericError):
    def __init__(self, param_name, message="non-finite value encountered"):
        super().__init__(f"{message} (parameter {param_name!r})")
        self.param_name = param_name
