"""Experiment config files: a small INI dialect with exact error locations.

Grammar
-------
- ``[section]`` headers; ``key = value`` pairs; blank lines ignored.
- Comments are full lines starting with ``#`` (no inline comments — ``;``
  separates matrix rows inside values).
- A line starting with whitespace continues the previous value.
- Sections: [network], [sweep], [run], [fairness], [protocol], and one
  [policy.LABEL] per scheduling policy (file order is sweep order).
- Gain values are a scalar (broadcast), a vector/matrix (rows separated by
  ``;``, entries by spaces), or ``uniform(a, b)`` resolved once from
  [network] gain_seed — user-relay gains first, then relay-base, from the
  same stream.  Serialized plans always carry explicit matrices, so a saved
  manifest replays bit-identically.
- snr_db is either an explicit list ("0 3 6 9") or "start:stop:step"
  (stop included when it falls on the grid).

The parser is hand-rolled instead of configparser because every diagnostic
must carry path:line (configparser discards line numbers once values are
read), and because values here embed ``;``-separated matrix rows that
configparser's interpolation would mangle.
"""

import re

import numpy as np

from .model import NetworkConfig
from .simulator import ExperimentPlan, PolicyEntry

_REQUIRED = object()

_SECTION_RE = re.compile(r"^\[([a-z0-9_]+(?:\.[A-Za-z0-9_.-]+)?)\]$")
_UNIFORM_RE = re.compile(r"^uniform\(\s*([^,\s][^,]*?)\s*,\s*([^)\s][^)]*?)\s*\)$")

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


class ConfigError(Exception):
    """Config problem with a path:line prefix when the location is known."""

    def __init__(self, message, path=None, line=None):
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


def parse_config_text(text, path="<config>"):
    """Parse the INI dialect into {section: {key: (raw value, line number)}}."""
    sections = {}
    current = None
    current_key = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            current_key = None
            continue
        if line[0] in " \t":
            if current is None or current_key is None:
                raise ConfigError("continuation line with nothing to continue", path, lineno)
            value, first_line = sections[current][current_key]
            sections[current][current_key] = (value + " " + stripped, first_line)
            continue
        match = _SECTION_RE.match(stripped)
        if match:
            name = match.group(1)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", path, lineno)
            sections[name] = {}
            current = name
            current_key = None
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value' or '[section]', got {stripped!r}", path, lineno)
        if current is None:
            raise ConfigError("key/value pair before any [section] header", path, lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", path, lineno)
        if key in sections[current]:
            prev_line = sections[current][key][1]
            raise ConfigError(
                f"duplicate key {key!r} (first defined at line {prev_line})", path, lineno
            )
        sections[current][key] = (value, lineno)
        current_key = key
    return sections


class SectionView:
    """Typed access to one parsed section, tracking which keys were consumed."""

    def __init__(self, path, name, data):
        self.path = path
        self.name = name
        self.data = data
        self.consumed = set()

    def _fetch(self, key, default):
        if key in self.data:
            self.consumed.add(key)
            return self.data[key]
        if default is _REQUIRED:
            raise ConfigError(f"[{self.name}] is missing required key {key!r}", self.path)
        return None

    def line(self, key):
        return self.data[key][1] if key in self.data else None

    def get_str(self, key, default=_REQUIRED):
        item = self._fetch(key, default)
        return default if item is None else item[0]

    def get_int(self, key, default=_REQUIRED):
        item = self._fetch(key, default)
        if item is None:
            return default
        value, line = item
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}", self.path, line) from None

    def get_float(self, key, default=_REQUIRED):
        item = self._fetch(key, default)
        if item is None:
            return default
        value, line = item
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {value!r}", self.path, line) from None

    def get_bool(self, key, default=_REQUIRED):
        item = self._fetch(key, default)
        if item is None:
            return default
        value, line = item
        word = value.lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise ConfigError(f"{key} must be a boolean (true/false), got {value!r}", self.path, line)

    def get_choice(self, key, choices, default=_REQUIRED):
        item = self._fetch(key, default)
        if item is None:
            return default
        value, line = item
        if value not in choices:
            raise ConfigError(
                f"{key} must be one of {', '.join(choices)}; got {value!r}", self.path, line
            )
        return value

    def get_float_list(self, key, default=_REQUIRED):
        item = self._fetch(key, default)
        if item is None:
            return default
        value, line = item
        try:
            values = [float(tok) for tok in value.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"{key} must be a list of numbers, got {value!r}", self.path, line) from None
        if not values:
            raise ConfigError(f"{key} must contain at least one number", self.path, line)
        return values

    def finish(self):
        """Reject keys nobody asked for — almost always a typo."""
        unknown = sorted(set(self.data) - self.consumed)
        if unknown:
            key = unknown[0]
            raise ConfigError(
                f"unknown key {key!r} in [{self.name}]", self.path, self.data[key][1]
            )


def _parse_snr_grid(view, key="snr_db", default=_REQUIRED):
    raw = view.get_str(key, None)
    if raw is None:
        if default is _REQUIRED:
            raise ConfigError(f"[{view.name}] is missing required key {key!r}", view.path)
        return default
    line = view.line(key)
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"{key} range must be start:stop:step, got {raw!r}", view.path, line
            )
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{key} range has non-numeric parts: {raw!r}", view.path, line) from None
        if step <= 0:
            raise ConfigError(f"{key} step must be > 0, got {step}", view.path, line)
        if stop < start:
            raise ConfigError(f"{key} stop must be >= start", view.path, line)
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key} must be numbers or start:stop:step, got {raw!r}", view.path, line) from None


def _resolve_gains(view, key, shape, rng):
    """Parse a gain value: scalar, explicit rows, or uniform(a, b)."""
    raw = view.get_str(key, None)
    if raw is None:
        return None  # caller supplies the default
    line = view.line(key)
    match = _UNIFORM_RE.match(raw)
    if match:
        try:
            lo, hi = float(match.group(1)), float(match.group(2))
        except ValueError:
            raise ConfigError(f"{key}: uniform() bounds must be numbers", view.path, line) from None
        if not lo < hi:
            raise ConfigError(f"{key}: uniform() needs a < b, got ({lo}, {hi})", view.path, line)
        return rng.uniform(lo, hi, size=shape)
    rows = [r.strip() for r in raw.split(";")]
    try:
        parsed = [[float(tok) for tok in row.split()] for row in rows if row]
    except ValueError:
        raise ConfigError(f"{key} has non-numeric entries: {raw!r}", view.path, line) from None
    if not parsed:
        raise ConfigError(f"{key} is empty", view.path, line)
    widths = {len(row) for row in parsed}
    if len(widths) != 1:
        raise ConfigError(f"{key} rows have inconsistent lengths {sorted(widths)}", view.path, line)
    arr = np.array(parsed, dtype=np.float64)
    if arr.size == 1:
        return float(arr.ravel()[0])
    if len(shape) == 1:
        flat = arr.ravel()
        if flat.size != shape[0]:
            raise ConfigError(
                f"{key} needs {shape[0]} entries, got {flat.size}", view.path, line
            )
        return flat
    if arr.shape != shape:
        raise ConfigError(
            f"{key} needs shape {shape[0]}x{shape[1]} (rows separated by ';'), got "
            f"{arr.shape[0]}x{arr.shape[1]}",
            view.path,
            line,
        )
    return arr


def _section(sections, path, name):
    return SectionView(path, name, sections.get(name, {}))


def plan_from_text(text, path="<config>"):
    """Build an ExperimentPlan from config text (see module docstring for grammar)."""
    sections = parse_config_text(text, path)
    known = {"network", "sweep", "run", "fairness", "protocol"}
    for name in sections:
        if name not in known and not name.startswith("policy."):
            raise ConfigError(f"unknown section [{name}]", path)

    net = _section(sections, path, "network")
    num_users = net.get_int("num_users")
    num_relays = net.get_int("num_relays")
    gain_seed = net.get_int("gain_seed", 0)
    rng = np.random.default_rng(gain_seed)
    mean_gain_ur = _resolve_gains(net, "mean_gain_ur", (num_users, num_relays), rng)
    if mean_gain_ur is None:
        mean_gain_ur = 1.0
    mean_gain_rb = _resolve_gains(net, "mean_gain_rb", (num_relays,), rng)
    if mean_gain_rb is None:
        mean_gain_rb = 1.0
    try:
        config = NetworkConfig(
            num_users=num_users,
            num_relays=num_relays,
            mean_gain_ur=mean_gain_ur,
            mean_gain_rb=mean_gain_rb,
            total_power=net.get_float("total_power", 1.0),
            alpha=net.get_float("alpha", 0.5),
            noise_power=net.get_float("noise_power", 1.0),
            snr_threshold=net.get_float("snr_threshold", 3.0),
            slot_duration=net.get_float("slot_duration", 0.002),
        )
    except ValueError as exc:
        raise ConfigError(f"[network] {exc}", path) from None
    net.finish()

    sweep = _section(sections, path, "sweep")
    snr_db = _parse_snr_grid(sweep, "snr_db", [15.0])
    trials = sweep.get_int("trials", 100_000)
    max_trials = sweep.get_int("max_trials", 10_000_000)
    min_outage_events = sweep.get_int("min_outage_events", 100)
    sweep.finish()

    run = _section(sections, path, "run")
    base_seed = run.get_int("seed", 1)
    fading = run.get_choice("fading", ("iid", "gauss_markov"), "iid")
    doppler_hz = run.get_float("doppler_hz", 15.0)
    rho = run.get_float("rho", None)
    shard_slots = run.get_int("shard_slots", 32_768)
    run.finish()

    fair = _section(sections, path, "fairness")
    fairness_snr_db = fair.get_float("snr_db", 15.0)
    fairness_slots = fair.get_int("slots", 200_000)
    fairness_windows = fair.get_float_list("windows", [0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0])
    fair.finish()

    proto = _section(sections, path, "protocol")
    use_protocol_path = proto.get_bool("enabled", False)
    vulnerable_window = proto.get_float("vulnerable_window", 0.0)
    backoff_scale = proto.get_float("backoff_scale", None)
    backoff_eps = proto.get_float("backoff_eps", None)
    protocol_slots = proto.get_int("slots", 100_000)
    proto.finish()

    policies = []
    for name in sections:
        if not name.startswith("policy."):
            continue
        label = name[len("policy."):]
        view = _section(sections, path, name)
        kind = view.get_choice("kind", ("tdma", "greedy", "relaxed"))
        group_size = view.get_int("group_size", view.get_int("k", 2))
        grouping = view.get_choice(
            "grouping", ("fixed_order", "random", "similar_gain", "dissimilar_gain"), "random"
        )
        grouping_seed = view.get_int("grouping_seed", 0)
        pattern_repeats = view.get_int("pattern_repeats", 1)
        view.finish()
        try:
            policies.append(
                PolicyEntry(
                    label=label,
                    kind=kind,
                    group_size=group_size,
                    grouping=grouping,
                    grouping_seed=grouping_seed,
                    pattern_repeats=pattern_repeats,
                )
            )
        except ValueError as exc:
            raise ConfigError(f"[{name}] {exc}", path) from None
    if not policies:
        raise ConfigError("at least one [policy.LABEL] section is required", path)

    try:
        return ExperimentPlan(
            config=config,
            snr_db=tuple(snr_db),
            policies=tuple(policies),
            trials_per_point=trials,
            max_trials=max_trials,
            min_outage_events=min_outage_events,
            base_seed=base_seed,
            fading=fading,
            doppler_hz=doppler_hz,
            rho=rho,
            shard_slots=shard_slots,
            fairness_snr_db=fairness_snr_db,
            fairness_slots=fairness_slots,
            fairness_windows=tuple(fairness_windows),
            protocol_slots=protocol_slots,
            vulnerable_window=vulnerable_window,
            backoff_scale=backoff_scale,
            backoff_eps=backoff_eps,
            use_protocol_path=use_protocol_path,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def load_plan(path):
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_text(fh.read(), path=str(path))


def manifest_from_csv(path):
    """Recover the embedded manifest from a result CSV's leading '# ' block."""
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            if not raw.startswith("#"):
                break
            line = raw.rstrip("\n")
            lines.append(line[2:] if line.startswith("# ") else line[1:])
    if not lines:
        raise ConfigError("no embedded manifest ('# ' comment block) found", path)
    return "\n".join(lines) + "\n"


def _fmt(value):
    return repr(float(value))


def _fmt_matrix(arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    return "; ".join(" ".join(_fmt(v) for v in row) for row in arr)


def serialize_plan(plan):
    """Render a plan back to config text; parsing it reproduces the plan exactly.

    Gains are written as explicit matrices (any uniform() expression in the
    source file has already been resolved), so replaying a serialized manifest
    never depends on gain_seed again.
    """
    cfg = plan.config
    lines = [
        "[network]",
        f"num_users = {cfg.num_users}",
        f"num_relays = {cfg.num_relays}",
        f"mean_gain_ur = {_fmt_matrix(cfg.mean_gain_ur)}",
        f"mean_gain_rb = {' '.join(_fmt(v) for v in cfg.mean_gain_rb)}",
        f"total_power = {_fmt(cfg.total_power)}",
        f"alpha = {_fmt(cfg.alpha)}",
        f"noise_power = {_fmt(cfg.noise_power)}",
        f"snr_threshold = {_fmt(cfg.snr_threshold)}",
        f"slot_duration = {_fmt(cfg.slot_duration)}",
        "",
        "[sweep]",
        f"snr_db = {' '.join(_fmt(s) for s in plan.snr_db)}",
        f"trials = {plan.trials_per_point}",
        f"max_trials = {plan.max_trials}",
        f"min_outage_events = {plan.min_outage_events}",
        "",
        "[run]",
        f"seed = {plan.base_seed}",
        f"fading = {plan.fading}",
        f"doppler_hz = {_fmt(plan.doppler_hz)}",
    ]
    if plan.rho is not None:
        lines.append(f"rho = {_fmt(plan.rho)}")
    lines += [
        f"shard_slots = {plan.shard_slots}",
        "",
        "[fairness]",
        f"snr_db = {_fmt(plan.fairness_snr_db)}",
        f"slots = {plan.fairness_slots}",
        f"windows = {' '.join(_fmt(w) for w in plan.fairness_windows)}",
        "",
        "[protocol]",
        f"enabled = {'true' if plan.use_protocol_path else 'false'}",
        f"vulnerable_window = {_fmt(plan.vulnerable_window)}",
    ]
    if plan.backoff_scale is not None:
        lines.append(f"backoff_scale = {_fmt(plan.backoff_scale)}")
    if plan.backoff_eps is not None:
        lines.append(f"backoff_eps = {_fmt(plan.backoff_eps)}")
    lines.append(f"slots = {plan.protocol_slots}")
    for entry in plan.policies:
        lines += [
            "",
            f"[policy.{entry.label}]",
            f"kind = {entry.kind}",
        ]
        if entry.kind == "relaxed":
            lines += [
                f"group_size = {entry.group_size}",
                f"grouping = {entry.grouping}",
                f"grouping_seed = {entry.grouping_seed}",
                f"pattern_repeats = {entry.pattern_repeats}",
            ]
    return "\n".join(lines) + "\n"
