"""Static parameter and multiply-accumulate counts.

One multiply-add is one MAC. Elementwise additions, activations, pixel
shuffles and the parameter-free bicubic skip are not counted. Attention
layers are counted exactly unless `faithful` is set, in which case they are
left out to match the closed-form ghost cost.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from tabulate import tabulate

from ..common.typing import AttentionConfig, GhostConfig, GhostMode, NetConfig

DEFAULT_INPUT_HW = (60, 60)

VARIANTS: Dict[str, Tuple[str, str]] = {
    "ab1": ("standard", "channel"),
    "ab2": ("ghost", "channel"),
    "ab3": ("ghost", "csam"),
    "ab4": ("ghost", "spatial"),
    "ab5": ("ghost", "none"),
}


def count_conv_params(
    k: int, m: int, n: int, bias: bool = False, groups: int = 1
) -> int:
    """k * k * (M / groups) * N weights, plus N biases if requested."""
    return k * k * (m // groups) * n + (n if bias else 0)


def conv_macs(
    k: int, c: int, n: int, h: int, w: int, groups: int = 1
) -> int:
    """n * h' * w' * (c / groups) * k * k."""
    return n * h * w * (c // groups) * k * k


def _check_mode(g: GhostConfig, mode: GhostMode) -> None:
    if mode == "dense" and g.ratio != 3:
        raise ValueError(
            "dense ghost counting is defined for q=3 only, got q={}".format(
                g.ratio
            )
        )
    if mode not in ("depthwise", "dense"):
        raise ValueError("unknown ghost mode {}".format(mode))


def count_ghost_params(
    g: GhostConfig, mode: GhostMode = "depthwise", bias: bool = False
) -> int:
    """Weights of a ghost module.

    depthwise: M * m * kp^2 + sum_j d_j^2 * m
    dense: M * m * kp^2 + sum_j d_j^2 * m^2, the q=3 closed form
    """
    _check_mode(g, mode)
    m = g.intrinsic_channels
    width = m if mode == "dense" else 1
    total = count_conv_params(g.primary_kernel, g.in_channels, m, bias)
    for d in g.ghost_kernels:
        total += count_conv_params(d, width, m, bias)
    return total


def ghost_macs(
    g: GhostConfig, h: int, w: int, mode: GhostMode = "depthwise"
) -> int:
    """m h' w' c kp^2 + sum_j m h' w' d_j^2 (times m in dense mode)."""
    _check_mode(g, mode)
    m = g.intrinsic_channels
    width = m if mode == "dense" else 1
    total = conv_macs(g.primary_kernel, g.in_channels, m, h, w)
    for d in g.ghost_kernels:
        total += conv_macs(d, width, m, h, w)
    return total


def speed_ratio(q: int, c: int, k: int, d: int) -> Fraction:
    """Exact conv / ghost cost ratio q c k^2 / (c k^2 + (q - 1) d^2)."""
    return Fraction(q * c * k * k, c * k * k + (q - 1) * d * d)


@dataclass(frozen=True)
class LayerCost:
    """One row of the report."""

    name: str
    kind: str
    params: int
    macs: int


@dataclass
class ComplexityReport:
    """Per-layer counts at a given LR input size."""

    rows: List[LayerCost]
    input_hw: Tuple[int, int]
    mode: GhostMode = "depthwise"
    faithful: bool = False
    double_macs: bool = False
    reference: Optional["ComplexityReport"] = field(default=None)

    @property
    def total_params(self) -> int:
        """Sum of row parameters."""
        return sum(row.params for row in self.rows)

    @property
    def total_macs(self) -> int:
        """Sum of row MACs, doubled if requested."""
        return sum(row.macs for row in self.rows) * self.mac_factor

    @property
    def mac_factor(self) -> int:
        """2 when reporting multiply and add separately."""
        return 2 if self.double_macs else 1

    def ratios(self) -> Optional[Tuple[float, float]]:
        """(params, MACs) of the reference divided by this report."""
        if self.reference is None:
            return None
        return (
            self.reference.total_params / self.total_params,
            self.reference.total_macs / self.total_macs,
        )

    def layer_params(self) -> Dict[str, int]:
        """Parameters of every layer that has weights."""
        return {row.name: row.params for row in self.rows if row.params}


class _Walker:
    """Accumulates rows while following the network layout."""

    def __init__(
        self, cfg: NetConfig, mode: GhostMode, faithful: bool
    ) -> None:
        self.cfg = cfg
        self.mode = mode
        self.faithful = faithful
        self.rows: List[LayerCost] = []

    def conv(  # pylint: disable=too-many-arguments
        self,
        name: str,
        k: int,
        c: int,
        n: int,
        hw: Tuple[int, int],
        groups: int = 1,
        bias: bool = True,
    ) -> None:
        kind = "depthwise" if groups > 1 and groups == c == n else "conv"
        self.rows.append(
            LayerCost(
                name,
                kind,
                count_conv_params(k, c, n, bias, groups),
                conv_macs(k, c, n, hw[0], hw[1], groups),
            )
        )

    def op(self, name: str, macs: int) -> None:
        self.rows.append(LayerCost(name, "op", 0, macs))

    def ghost(self, name: str, g: GhostConfig, hw: Tuple[int, int]) -> None:
        m = g.intrinsic_channels
        self.conv(name + ".primary", g.primary_kernel, g.in_channels, m, hw)
        for j, d in enumerate(g.ghost_kernels):
            if self.mode == "dense":
                self.conv("{}.cheap.{}".format(name, j), d, m, m, hw)
            else:
                self.conv("{}.cheap.{}".format(name, j), d, m, m, hw, m)

    def channel_attention(
        self,
        name: str,
        channels: int,
        a: AttentionConfig,
        hw: Tuple[int, int],
    ) -> None:
        reduced = a.reduced_channels(channels)
        pools = 2 if a.dual_pool else 1
        pixels = hw[0] * hw[1]
        self.op(name + ".pool", pools * channels * pixels)
        self.rows.append(
            LayerCost(
                name + ".down",
                "conv",
                channels * reduced,
                pools * channels * reduced,
            )
        )
        self.rows.append(
            LayerCost(
                name + ".up",
                "conv",
                reduced * channels,
                pools * reduced * channels,
            )
        )
        self.op(name + ".gate", channels * pixels)

    def spatial_attention(
        self,
        name: str,
        channels: int,
        a: AttentionConfig,
        hw: Tuple[int, int],
    ) -> None:
        pixels = hw[0] * hw[1]
        self.op(name + ".pool", 2 * channels * pixels)
        self.conv(name + ".conv", a.spatial_kernel, 2, 1, hw, bias=False)
        self.op(name + ".gate", channels * pixels)

    def attention(self, name: str, hw: Tuple[int, int]) -> None:
        cfg = self.cfg
        kind = cfg.attention
        if self.faithful or kind == "none":
            return
        a = cfg.attention_config()
        if kind == "csam":
            self.channel_attention(name + ".channel", cfg.channels, a, hw)
            self.spatial_attention(name + ".spatial", cfg.channels, a, hw)
        elif kind == "channel":
            self.channel_attention(name, cfg.channels, a, hw)
        else:
            self.spatial_attention(name, cfg.channels, a, hw)

    def block(self, name: str, hw: Tuple[int, int]) -> None:
        cfg = self.cfg
        if cfg.conv == "ghost":
            ghost = cfg.ghost_config()
            self.ghost(name + ".ghost1", ghost, hw)
            self.ghost(name + ".ghost2", ghost, hw)
        else:
            c, k = cfg.channels, cfg.kernel_size
            self.conv(name + ".conv1", k, c, c, hw)
            self.conv(name + ".conv2", k, c, c, hw)
        self.attention(name + ".attention", hw)

    def network(self, hw: Tuple[int, int]) -> None:
        cfg = self.cfg
        c, k = cfg.channels, cfg.kernel_size
        self.conv("head", k, cfg.colors, c, hw)
        for g in range(cfg.n_groups):
            for b in range(cfg.n_blocks):
                self.block("body.{}.blocks.{}".format(g, b), hw)
            self.conv("body.{}.tail".format(g), k, c, c, hw)
        self.conv("body_tail", k, c, c, hw)
        for i, factor in enumerate(cfg.upscale_factors()):
            self.conv("upsample.{}".format(i), k, c, factor * factor * c, hw)
            hw = (hw[0] * factor, hw[1] * factor)
        self.conv("tail", k, c, cfg.colors, hw)


def apply_variant(cfg: NetConfig, variant: str) -> NetConfig:
    """Switch the block convolution and attention to an ablation preset."""
    if variant not in VARIANTS:
        raise ValueError(
            "unknown variant {}, expected one of {}".format(
                variant, ", ".join(sorted(VARIANTS))
            )
        )
    conv, attention = VARIANTS[variant]
    return cfg.copy(update=dict(conv=conv, attention=attention))


def analyze(
    cfg: NetConfig,
    input_hw: Tuple[int, int] = DEFAULT_INPUT_HW,
    mode: GhostMode = "depthwise",
    faithful: bool = False,
    double_macs: bool = False,
    reference: Optional[NetConfig] = None,
) -> ComplexityReport:
    """Per-layer report of `cfg` for an LR input of `input_hw`.

    With `reference`, the report also carries the reference network's
    report, analyzed with the same settings, for ratio output.
    """
    if input_hw[0] < 1 or input_hw[1] < 1:
        raise ValueError(
            "input size must be positive, got {}".format(input_hw)
        )
    if cfg.conv == "ghost":
        _check_mode(cfg.ghost_config(), mode)
    hw = (int(input_hw[0]), int(input_hw[1]))
    walker = _Walker(cfg, mode, faithful)
    walker.network(hw)
    report = ComplexityReport(walker.rows, hw, mode, faithful, double_macs)
    if reference is not None:
        report = replace(
            report,
            reference=analyze(
                reference, input_hw, mode, faithful, double_macs
            ),
        )
    return report


def variant_name(cfg: NetConfig) -> str:
    """Ablation preset matching `cfg`, or `custom`."""
    for name, (conv, attention) in VARIANTS.items():
        if cfg.conv == conv and cfg.attention == attention:
            return name
    return "custom"


def render_table(report: ComplexityReport, per_layer: bool = True) -> str:
    """Aligned text table of the rows and totals."""
    factor = report.mac_factor
    rows = [
        [row.name, row.kind, row.params, row.macs * factor]
        for row in report.rows
        if per_layer
    ]
    rows.append(["total", "", report.total_params, report.total_macs])
    return tabulate(rows, headers=["layer", "kind", "params", "macs"])


def render_kv(report: ComplexityReport) -> str:
    """Machine-readable `key=value` lines."""
    factor = report.mac_factor
    lines = []
    for row in report.rows:
        lines.append("layer.{}.params={}".format(row.name, row.params))
        lines.append("layer.{}.macs={}".format(row.name, row.macs * factor))
    lines.append("total.params={}".format(report.total_params))
    lines.append("total.macs={}".format(report.total_macs))
    ratios = report.ratios()
    if ratios is not None:
        lines.append("ratio.params={:.4f}".format(ratios[0]))
        lines.append("ratio.macs={:.4f}".format(ratios[1]))
    return "\n".join(lines)


def summarize(report: ComplexityReport) -> str:
    """One-line summary in millions and giga-MACs."""
    text = "{:.2f}M params, {:.2f}G MACs at {}x{}".format(
        report.total_params / 1e6,
        report.total_macs / 1e9,
        report.input_hw[0],
        report.input_hw[1],
    )
    ratios = report.ratios()
    if ratios is not None:
        text += ", reference/this: {:.2f}x params, {:.2f}x MACs".format(
            *ratios
        )
    return text

