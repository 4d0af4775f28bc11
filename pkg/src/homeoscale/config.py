"""Strict sectioned key-value configuration for runs and sweeps.

Configs are INI text. Every key is optional with a documented default;
unknown sections or keys are rejected before any simulation starts. All
numeric values are SI base units.
"""

from __future__ import annotations

import configparser
import io

from .agc import AgcRefs
from .device import DeviceParams, LeakageCellParams, fit_leakage_calibration
from .dpi import DpiParams
from .errors import ValidationError
from .neuron import NeuronParams
from .engine import EngineTolerances
from .experiments import PROTOCOLS, SystemParams


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"expected a number, got {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ValidationError(f"expected an integer, got {text!r}") from exc


def _parse_bool(text: str) -> bool:
    lower = text.strip().lower()
    if lower in ("1", "true", "yes", "on"):
        return True
    if lower in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> list:
    items = [s for s in text.replace(",", " ").split() if s]
    return [_parse_float(s) for s in items]


def parse_anchor_triples(text: str) -> list:
    """Triples '(v_g, slope_up, slope_down)' separated by ';' or newlines."""
    out = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = _parse_float_list(chunk)
        if len(vals) != 3:
            raise ValidationError(f"anchor needs 3 numbers (v_g slope_up slope_down): {chunk!r}")
        out.append(tuple(vals))
    return out


def _parse_pairs(text: str) -> tuple:
    pairs = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = _parse_float_list(chunk)
        if len(vals) != 2:
            raise ValidationError(f"calibration point needs 2 numbers (current rate): {chunk!r}")
        pairs.append(tuple(vals))
    if len(pairs) != 2:
        raise ValidationError("neuron.calibrate needs exactly two (current, rate) points")
    return tuple(pairs)


def _parse_potentiation(text: str) -> list:
    """Schedule 't:i,j; t:k' -> [(t, (i, j)), (t, (k,))]."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(f"potentiation entries are 't:indices', got {chunk!r}")
        t_text, idx_text = chunk.split(":", 1)
        idxs = tuple(_parse_int(s) for s in idx_text.replace(",", " ").split())
        out.append((_parse_float(t_text), idxs))
    return out


def _parse_disturbance(text: str) -> tuple:
    vals = _parse_float_list(text)
    if len(vals) != 3:
        raise ValidationError("disturbance needs 3 numbers: t duration factor")
    return tuple(vals)


def _parse_mode(text: str) -> str:
    if text not in ("rate", "spike"):
        raise ValidationError(f"neuron_mode must be 'rate' or 'spike', got {text!r}")
    return text


def _parse_protocol(text: str) -> str:
    if text not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {text!r}; choose from {sorted(PROTOCOLS)}")
    return text


# section -> key -> (parser, default help text, sweepable)
SCHEMA = {
    "device": {
        "u_t": (_parse_float, "thermal voltage, V (default 0.0258)", True),
        "kappa": (_parse_float, "subthreshold slope coefficient (default 0.7)", True),
        "i0": (_parse_float, "subthreshold prefactor, A (default 1e-16)", True),
        "vdd": (_parse_float, "supply voltage, V (default 1.8)", True),
    },
    "leakage": {
        "c_f": (_parse_float, "ramp integration capacitor, F (default 1e-12)", True),
        "i_parasitic_up": (_parse_float, "additive up-direction parasitic, A (default 0)", True),
        "i_parasitic_down": (_parse_float, "additive down-direction parasitic, A (default 0)", True),
        "anchors": (parse_anchor_triples,
                    "calibration triples 'v_g up down; ...' (default: 60 s anchor at "
                    "1.42 V plus 1.5e-6/4.5e-7 V/s at 1.72 V)", False),
    },
    "dpi": {
        "c_dpi": (_parse_float, "filter capacitor, F (default 1e-12)", True),
        "i_tau": (_parse_float, "time-constant bias current, A (default 1e-11)", True),
    },
    "synapses": {
        "weights": (_parse_float_list, "per-synapse weight currents, A (protocol default)", False),
        "pulse_width": (_parse_float, "input pulse window, s (protocol default)", True),
        "i_dc": (_parse_float, "DC test-branch current, A (protocol default)", True),
    },
    "neuron": {
        "q_th": (_parse_float, "charge threshold, C (default from calibration)", True),
        "rho": (_parse_float, "refractory period, s (default from calibration)", True),
        "i_leak": (_parse_float, "membrane leak, A (default 0)", True),
        "adapt_q": (_parse_float, "per-spike adaptation charge, C (default 0)", True),
        "rate_window": (_parse_float, "rate-estimator EMA window, s (default 1)", True),
        "calibrate": (_parse_pairs, "two 'current rate' points, e.g. '20e-9 100; 40e-9 180'", False),
    },
    "agc": {
        "i_ref": (_parse_float, "reference current, A (default 20e-9)", True),
        "v_ref_h": (_parse_float, "high reference, V (default 1.384)", True),
        "v_ref_m": (_parse_float, "mid reference, V (default 1.382)", True),
        "v_ref_l": (_parse_float, "low reference, V (default 1.380)", True),
        "hysteresis_eps": (_parse_float, "comparator relative deadband (default 1e-3)", True),
        "v_g": (_parse_float, "leakage-cell gate bias, V (protocol default)", True),
    },
    "engine": {
        "gain_drift_eta": (_parse_float, "max relative gain drift per segment (default 1e-3)", True),
        "sample_interval": (_parse_float, "trace sampling interval, s (default horizon/2000)", True),
        "max_segment": (_parse_float, "hard segment cap, s (default 1e4)", True),
    },
    "experiment": {
        "protocol": (_parse_protocol, "one of fig6..fig12 (default fig6)", False),
        "horizon": (_parse_float, "run length, s (protocol default)", True),
        "start_locked": (_parse_bool, "start with the loop already locked (default true)", False),
        "neuron_mode": (_parse_mode, "'rate' or 'spike' (protocol default)", False),
        "pre_step": (_parse_float, "baseline DC current, A (step protocols)", True),
        "post_step": (_parse_float, "stepped DC current, A (step protocols)", True),
        "t_step": (_parse_float, "step time, s (step protocols)", True),
        "t_back": (_parse_float, "reversal time, s (step protocols)", True),
        "target_recovery": (_parse_float, "desired recovery time, s (fig7/fig8)", True),
        "step_ratio": (_parse_float, "drive step ratio (fig10)", True),
        "with_disturbance": (_parse_bool, "inject the mid-run drive disturbance (fig10)", False),
        "n_synapses": (_parse_int, "synapse count (fig11/fig12)", False),
        "input_rate": (_parse_float, "Poisson input rate, Hz (fig11/fig12)", True),
        "teacher_rate": (_parse_float, "teacher baseline rate, Hz (fig11/fig12)", True),
        "potentiation": (_parse_potentiation, "'t:i,j; t:k,l' potentiation schedule", False),
        "depress_all_at": (_parse_float, "time all weights reset low, s (fig11/fig12)", True),
        "w_potentiated": (_parse_float, "potentiated weight current, A (default 1e-9)", True),
        "w_depressed": (_parse_float, "depressed weight current, A (default 5e-11)", True),
        "recovery_fraction": (_parse_float, "recovery budget as a fraction of the "
                              "smallest event gap (default 0.45)", True),
        "disturbance": (_parse_disturbance, "'t duration factor' drive disturbance", False),
    },
}


def parse_config_text(text: str) -> dict:
    """Parse INI text into {section: {key: value}}, rejecting unknown keys."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"config syntax error: {exc}") from exc
    out: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValidationError(
                f"unknown config section [{section}]; valid: {sorted(SCHEMA)}")
        out[section] = {}
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ValidationError(
                    f"unknown key '{key}' in [{section}]; valid: {sorted(SCHEMA[section])}")
            parser = SCHEMA[section][key][0]
            out[section][key] = parser(raw)
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def sweepable_keys() -> list:
    """Dotted section.key names whose values can be swept numerically."""
    return sorted(f"{s}.{k}" for s, keys in SCHEMA.items()
                  for k, (_, _, sweepable) in keys.items() if sweepable)


def set_value(cfg: dict, dotted_key: str, value: float):
    """Override one numeric key (used by sweeps)."""
    if "." not in dotted_key:
        raise ValidationError(f"sweep key must be 'section.key', got {dotted_key!r}")
    section, key = dotted_key.split(".", 1)
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ValidationError(
            f"unknown key {dotted_key!r}; sweepable keys: {', '.join(sweepable_keys())}")
    if not SCHEMA[section][key][2]:
        raise ValidationError(
            f"key {dotted_key!r} is not sweepable; sweepable keys: {', '.join(sweepable_keys())}")
    cfg.setdefault(section, {})[key] = value


def build_system(cfg: dict) -> SystemParams:
    dev_kw = {k: v for k, v in cfg.get("device", {}).items()}
    dev = DeviceParams(**dev_kw)
    leak = cfg.get("leakage", {})
    cell_kw = {k: leak[k] for k in ("c_f", "i_parasitic_up", "i_parasitic_down") if k in leak}
    if "v_g" in cfg.get("agc", {}):
        cell_kw["v_g"] = cfg["agc"]["v_g"]
    cell = LeakageCellParams(**cell_kw)
    if "anchors" in leak:
        calib = fit_leakage_calibration(leak["anchors"])
    else:
        calib = None  # SystemParams fills the default
    dpi_kw = {k: v for k, v in cfg.get("dpi", {}).items()}
    dpi = DpiParams(dev=dev, **dpi_kw)
    return SystemParams(dev=dev, dpi=dpi, cell=cell, calib=calib)


def build_refs(cfg: dict) -> AgcRefs | None:
    agc_cfg = {k: v for k, v in cfg.get("agc", {}).items() if k != "v_g"}
    if not agc_cfg:
        return None
    return AgcRefs(**agc_cfg)


def build_tolerances(cfg: dict, experiment) -> EngineTolerances:
    eng = cfg.get("engine", {})
    kw = dict(eng)
    if "sample_interval" not in kw:
        kw["sample_interval"] = experiment.default_tolerances().sample_interval
    return EngineTolerances(**kw)


# builder keyword each protocol accepts, keyed by config name
_PROTOCOL_KEYS = {
    "fig6": {"pre_step", "post_step", "t_step", "t_back", "horizon", "target_recovery"},
    "fig7": {"pre_step", "post_step", "t_step", "t_back", "horizon", "target_recovery"},
    "fig8": {"pre_step", "post_step", "t_step", "t_back", "horizon", "target_recovery"},
    "fig9": {"horizon"},
    "fig10": {"step_ratio", "horizon", "t_step", "pre_step", "with_disturbance"},
    "fig11": {"n_synapses", "potentiation", "depress_all_at", "input_rate",
              "teacher_rate", "w_potentiated", "w_depressed", "horizon",
              "recovery_fraction", "pulse_width"},
    "fig12": {"n_synapses", "potentiation", "depress_all_at", "input_rate",
              "teacher_rate", "w_potentiated", "w_depressed", "horizon",
              "recovery_fraction", "pulse_width"},
}

_KEY_RENAME = {"potentiation": "potentiation_times", "teacher_rate": "teacher_rate_target"}


def build_experiment(cfg: dict):
    """Construct the configured protocol experiment from a parsed config."""
    exp_cfg = dict(cfg.get("experiment", {}))
    protocol = exp_cfg.pop("protocol", "fig6")
    allowed = _PROTOCOL_KEYS[protocol]
    kwargs = {}
    for key in list(exp_cfg):
        if key in allowed:
            kwargs[_KEY_RENAME.get(key, key)] = exp_cfg.pop(key)
    if protocol in ("fig11", "fig12") and "pulse_width" in cfg.get("synapses", {}):
        kwargs["pulse_width"] = cfg["synapses"]["pulse_width"]
    kwargs["system"] = build_system(cfg)
    refs = build_refs(cfg)
    if refs is not None:
        kwargs["refs"] = refs
    if "v_g" in cfg.get("agc", {}):
        kwargs["v_g"] = cfg["agc"]["v_g"]
    if protocol == "fig10" and "disturbance" in exp_cfg:
        exp_cfg.pop("disturbance")
        kwargs["with_disturbance"] = True

    neuron_cfg = cfg.get("neuron", {})
    if protocol in ("fig6", "fig7", "fig8") and "calibrate" in neuron_cfg:
        kwargs["neuron_calibration"] = neuron_cfg["calibrate"]

    exp = PROTOCOLS[protocol](**kwargs)

    # post-build overrides
    if "q_th" in neuron_cfg or "rho" in neuron_cfg:
        base = exp.resolved_neuron_params()
        exp.neuron_params = NeuronParams(
            q_th=neuron_cfg.get("q_th", base.q_th),
            rho=neuron_cfg.get("rho", base.rho),
            i_leak=neuron_cfg.get("i_leak", base.i_leak),
            adapt_q=neuron_cfg.get("adapt_q", base.adapt_q),
        )
        exp.neuron_calibration = None
    elif "i_leak" in neuron_cfg or "adapt_q" in neuron_cfg:
        base = exp.resolved_neuron_params()
        exp.neuron_params = NeuronParams(
            q_th=base.q_th, rho=base.rho,
            i_leak=neuron_cfg.get("i_leak", base.i_leak),
            adapt_q=neuron_cfg.get("adapt_q", base.adapt_q),
        )
        exp.neuron_calibration = None
    if "rate_window" in neuron_cfg:
        exp.rate_window = neuron_cfg["rate_window"]
    syn_cfg = cfg.get("synapses", {})
    if "weights" in syn_cfg:
        exp.bank.weights = list(syn_cfg["weights"])
    if "pulse_width" in syn_cfg:
        exp.bank.pulse_width = syn_cfg["pulse_width"]
    if "i_dc" in syn_cfg and protocol not in ("fig6", "fig7", "fig8", "fig10"):
        exp.bank.i_dc = syn_cfg["i_dc"]
    if "start_locked" in exp_cfg:
        exp.start_locked = exp_cfg["start_locked"]
    if "neuron_mode" in exp_cfg:
        exp.neuron_mode = exp_cfg["neuron_mode"]
    if "disturbance" in exp_cfg:
        exp.disturbance = exp_cfg["disturbance"]
    exp.validate()
    return exp


def render_schema_help() -> str:
    """Key-by-key documentation for --help."""
    buf = io.StringIO()
    buf.write("configuration keys (INI sections; all optional, SI units):\n")
    for section, keys in SCHEMA.items():
        buf.write(f"\n[{section}]\n")
        for key, (_, doc, sweepable) in keys.items():
            marker = " [sweepable]" if sweepable else ""
            buf.write(f"  {key} - {doc}{marker}\n")
    return buf.getvalue()
