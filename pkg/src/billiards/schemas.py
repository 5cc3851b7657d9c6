"""JSON schemas for the CLI's machine-readable inputs and outputs."""

TABLE_SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "billiard table spec",
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {
            "properties": {
                "type": {"const": "circle"},
                "radius": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        {
            "properties": {
                "type": {"const": "ellipse"},
                "a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["a", "b"],
        },
        {
            "properties": {
                "type": {"const": "polar_graph"},
                "base": {"type": "number"},
                "cos": {"type": "array", "items": {"type": "number"}},
                "sin": {"type": "array", "items": {"type": "number"}},
            },
            "description": "support function h = base + sum c_k cos(k t) + s_k sin(k t); "
                           "h + h'' must stay positive",
        },
        {
            "properties": {
                "type": {"const": "piecewise"},
                "segments": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "oneOf": [
                            {
                                "properties": {
                                    "kind": {"const": "arc"},
                                    "center": {"type": "array"},
                                    "radius": {"type": "number"},
                                    "start_angle": {"type": "number"},
                                    "turn": {"type": "number",
                                             "description": "signed subtended angle, + for CCW"},
                                },
                                "required": ["kind", "center", "radius", "start_angle"],
                            },
                            {
                                "properties": {
                                    "kind": {"const": "line"},
                                    "start": {"type": "array"},
                                    "end": {"type": "array"},
                                },
                                "required": ["kind", "start", "end"],
                            },
                        ],
                    },
                },
            },
            "required": ["segments"],
            "description": "consecutive segment endpoints must chain into a closed curve",
        },
    ],
}

ORBIT_CSV_SCHEMA = {
    "title": "orbit dump CSV",
    "description": "one row per bounce; l and lambda are the outgoing chord length and "
                   "one-bounce focusing distance at the row's footpoint; beam columns "
                   "present only with --beam",
    "columns": ["i", "s", "alpha", "l", "lambda",
                "u", "v", "x_or_inf", "linear_flag", "factor"],
}

ORBITS_JSON_SCHEMA = {
    "title": "periodic orbits report",
    "type": "object",
    "properties": {
        "n": {"type": "integer"},
        "orbits": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "n": {"type": "integer"},
                    "minimal_period": {"type": "integer"},
                    "rotation_number": {"type": "string"},
                    "points": {"type": "array", "items": {
                        "type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}]}},
                    "trace": {"type": "number"},
                    "classification": {
                        "enum": ["hyperbolic", "elliptic", "parabolic",
                                 "degenerate_plus", "degenerate_minus"]},
                    "perimeter": {"type": "number"},
                },
            },
        },
    },
}

ATLAS_JSON_SCHEMA = {
    "title": "phase-space periodic atlas",
    "type": "object",
    "properties": {
        "grid": {"type": "array"},
        "n_range": {"type": "array"},
        "fraction_periodic": {"type": "number"},
        "entries": {"type": "array", "items": {
            "type": "object",
            "properties": {
                "n": {"type": "integer"},
                "cell": {"type": "array"},
                "s": {"type": "number"},
                "alpha": {"type": "number"},
                "classification": {"type": "string"},
                "trace": {"type": "number"},
                "perimeter": {"type": "number"},
            }}},
    },
}

IDENTITY_JSON_SCHEMA = {
    "title": "identity scan report",
    "type": "object",
    "properties": {
        "c": {"type": "number"},
        "max_abs_residual": {"type": "number"},
        "min_abs_residual": {"type": "number"},
        "argmax": {"type": "array"},
        "curvature_agreement": {"type": "number"},
        "heatmap_csv": {"type": "string"},
    },
}

SPHERE_TABLE_SCHEMA = {
    "title": "sphere bigon table spec",
    "type": "object",
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 2},
        "tangency_latitude": {"type": "number", "exclusiveMinimum": 0},
        "cap_type": {"const": "small_circle"},
    },
    "required": ["p", "q"],
}

BULGE_SCHEMA = {
    "title": "cap bulge spec",
    "type": "object",
    "properties": {
        "cap": {"enum": ["upper", "lower"]},
        "amplitude": {"type": "number",
                      "description": "latitude offset at mid-cap; >0 outward, <0 intrudes"},
        "power": {"type": "integer", "minimum": 2},
    },
    "required": ["cap", "amplitude"],
}

CERTIFICATE_JSON_SCHEMA = {
    "title": "open-set periodicity certificate",
    "type": "object",
    "properties": {
        "p": {"type": "integer"},
        "q": {"type": "integer"},
        "eps": {"type": "number"},
        "certified": {"type": "boolean"},
        "samples": {"type": "integer"},
        "failures": {"type": "integer"},
        "min_period_histogram": {"type": "object"},
        "length_stats": {"type": "object"},
        "expected_period": {"type": "integer"},
        "center_period": {"type": "integer"},
        "rect": {"type": "array"},
    },
}

COMMAND_SCHEMAS = {
    "orbit": {"input": {"table": TABLE_SPEC_SCHEMA}, "output": ORBIT_CSV_SCHEMA},
    "periodic": {"input": {"table": TABLE_SPEC_SCHEMA},
                 "output": {"orbits": ORBITS_JSON_SCHEMA, "atlas": ATLAS_JSON_SCHEMA}},
    "identity": {"input": {"table": TABLE_SPEC_SCHEMA}, "output": IDENTITY_JSON_SCHEMA},
    "sphere": {"input": {"table": SPHERE_TABLE_SCHEMA, "bulge": BULGE_SCHEMA},
               "output": CERTIFICATE_JSON_SCHEMA},
}
