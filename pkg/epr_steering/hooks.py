app_name = "epr_steering"
app_title = "EPR Steering"
app_publisher = "Your Company"
app_description = "Decide and quantify EPR steerability of two-qubit states under finite measurement settings"
app_email = "info@example.com"
app_license = "MIT"

# Command routes
# Each CLI subcommand maps to the dotted path of its handler; the CLI resolves
# the handler lazily so `classify` never imports the solver stack.
command_routes = {
    "classify": "epr_steering.cli.cmd_classify",
    "radius": "epr_steering.cli.cmd_radius",
    "scan-region": "epr_steering.cli.cmd_scan_region",
    "scan-linear": "epr_steering.cli.cmd_scan_linear",
    "simulate": "epr_steering.cli.cmd_simulate",
    "boundaries": "epr_steering.cli.cmd_boundaries",
    "runs": "epr_steering.cli.cmd_runs",
}

# Reports
# Tabular outputs follow the report contract: execute(filters) -> (columns, data)
report_routes = {
    "scan-region": "epr_steering.steering.report.region_map.region_map.execute",
    "scan-linear": "epr_steering.steering.report.linear_inequality.linear_inequality.execute",
    "boundaries": "epr_steering.steering.report.region_map.region_map.execute_boundaries",
}


def get_attr(dotted_path):
    """Resolve a dotted path from the route tables to the callable it names"""
    import importlib

    module_name, _, attr = dotted_path.rpartition(".")
    return getattr(importlib.import_module(module_name), attr)
