from epr_steering.api.steering_errors import ParamError
from epr_steering.steering.criteria import SUPPORTED_N, linear_inequality
from epr_steering.steering.states import FamilyParams, make_family_state


def execute(filters=None):
    filters = filters or {}
    columns = get_columns()
    data = get_data(filters)
    return columns, data


def get_columns():
    return [
        {"fieldname": "n", "label": "Settings", "fieldtype": "Int"},
        {"fieldname": "S_n", "label": "S_n", "fieldtype": "Float"},
        {"fieldname": "C_n", "label": "C_n", "fieldtype": "Float"},
        {"fieldname": "violation", "label": "S_n - C_n", "fieldtype": "Float"},
    ]


def get_data(filters):
    rho = filters.get("state")
    if rho is None:
        rho = make_family_state(FamilyParams(filters.get("p", 1.0), filters.get("theta", 0.0)))

    ns = sorted(set(filters.get("n") or SUPPORTED_N))
    unsupported = [n for n in ns if n not in SUPPORTED_N]
    if unsupported:
        raise ParamError(f"unsupported setting counts {unsupported}; supported: {list(SUPPORTED_N)}", field="n")

    direction = filters.get("direction", "ba")
    return [linear_inequality(rho, n, direction).to_dict() for n in ns]
