"""
EPR Steering Error Codes and Helpers

Every failure raised by the library carries a registry code so the CLI can
map it to an exit status and a machine-readable error object.
"""

# Error Types
INPUT_ERROR = "INPUT-ERROR"
STATE_ERROR = "STATE-ERROR"
SOLVER_ERROR = "SOLVER-ERROR"
DATA_ERROR = "DATA-ERROR"

# Error codes
ERRORS = {
    # Input errors (10xxx)
    "10000": {"type": INPUT_ERROR, "message": "Invalid input"},
    "10001": {"type": INPUT_ERROR, "message": "Parameter out of range"},
    "10002": {"type": INPUT_ERROR, "message": "Vector is not a unit vector"},
    "10003": {"type": INPUT_ERROR, "message": "Duplicate or antipodal measurement settings"},
    "10004": {"type": INPUT_ERROR, "message": "Setting count exceeds the enumeration cap"},
    "10005": {"type": INPUT_ERROR, "message": "Invalid settings file"},

    # State errors (20xxx)
    "20000": {"type": STATE_ERROR, "message": "Invalid density matrix"},
    "20001": {"type": STATE_ERROR, "message": "Matrix does not have unit trace"},
    "20002": {"type": STATE_ERROR, "message": "Malformed state file"},

    # Solver errors (30xxx)
    "30000": {"type": SOLVER_ERROR, "message": "Feasibility solver stalled at the iteration cap"},

    # Data errors (40xxx)
    "40000": {"type": DATA_ERROR, "message": "Insufficient counting data"},
}

# Exit codes per error type
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

EXIT_CODES = {
    INPUT_ERROR: EXIT_INPUT,
    STATE_ERROR: EXIT_INPUT,
    DATA_ERROR: EXIT_INPUT,
    SOLVER_ERROR: EXIT_SOLVER,
}


class SteeringError(Exception):
    """Base class for all library errors; carries a registry code and context"""

    code = "10000"

    def __init__(self, message=None, code=None, **context):
        if code is not None:
            self.code = str(code)
        self.message = message or ERRORS.get(self.code, {}).get("message", "Unknown error")
        self.context = context
        super().__init__(self.message)

    @property
    def error_type(self):
        return ERRORS.get(self.code, {"type": INPUT_ERROR})["type"]

    @property
    def exit_code(self):
        return EXIT_CODES.get(self.error_type, EXIT_INPUT)


class ParamError(SteeringError):
    code = "10001"


class NormalizationError(SteeringError):
    code = "10002"


class DuplicateSettingError(SteeringError):
    code = "10003"


class CapError(SteeringError):
    code = "10004"


class SettingsError(SteeringError):
    code = "10005"


class ValidationError(SteeringError):
    code = "20000"


class TraceError(SteeringError):
    code = "20001"


class ParseError(SteeringError):
    code = "20002"


class SolverStall(SteeringError):
    code = "30000"


class InsufficientData(SteeringError):
    code = "40000"


def build_error(code, custom_message=None):
    """Build an error object from an error code"""
    error_info = ERRORS.get(str(code), {
        "type": INPUT_ERROR,
        "message": "Unknown error"
    })

    return {
        "type": error_info["type"],
        "code": str(code),
        "message": custom_message or error_info["message"]
    }


def build_error_response(exc):
    """Build the JSON error object written to stderr with --json-errors"""
    if isinstance(exc, SteeringError):
        error = build_error(exc.code, exc.message)
        context = {key: _jsonable(value) for key, value in exc.context.items()}
        if context:
            error["context"] = context
        return {"status": "error", "error": error}

    return {"status": "error", "error": build_error("10000", str(exc))}


def exit_code_for(exc):
    """Exit status for an exception escaping a command"""
    if isinstance(exc, SteeringError):
        return exc.exit_code
    return EXIT_INPUT


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
