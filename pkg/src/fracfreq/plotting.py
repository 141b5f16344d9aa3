"""Static SVG renderings of Bode and Nyquist data."""

from __future__ import annotations


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def bode_svg(resp, path, margins=None, title=None):
    """Magnitude and phase panels over log-omega."""
    plt = _pyplot()
    fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_m.semilogx(resp.omegas, resp.mag_db, "b-", lw=1.2)
    ax_m.axhline(0.0, color="k", lw=0.6, ls=":")
    ax_m.set_ylabel("magnitude [dB]")
    ax_p.semilogx(resp.omegas, resp.phase_deg, "b-", lw=1.2)
    ax_p.axhline(-180.0, color="k", lw=0.6, ls=":")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("omega [rad/s]")
    if margins is not None:
        if margins.gain_crossover_omega is not None:
            w = margins.gain_crossover_omega
            ax_m.axvline(w, color="g", lw=0.8, ls="--")
            ax_p.axvline(w, color="g", lw=0.8, ls="--")
            ax_p.annotate("PM = %.2f deg" % margins.phase_margin_deg, (w, -180.0),
                          textcoords="offset points", xytext=(4, 8), color="g")
        if margins.phase_crossover_omega is not None:
            w = margins.phase_crossover_omega
            ax_m.axvline(w, color="r", lw=0.8, ls="--")
            ax_p.axvline(w, color="r", lw=0.8, ls="--")
            ax_m.annotate("GM = %.2f dB" % margins.gain_margin_db, (w, 0.0),
                          textcoords="offset points", xytext=(4, 8), color="r")
    for ax in (ax_m, ax_p):
        ax.grid(True, which="both", lw=0.3)
    if title:
        ax_m.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def nyquist_svg(curve, path, title=None, zoom=None):
    """Contour with the critical point marked; ``zoom`` limits the axes to a box."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 6))
    pos = curve.positive
    ax.plot(pos.real, pos.imag, "b-", lw=1.2, label="omega > 0")
    if curve.mirrored:
        neg = curve.points[len(pos):]
        ax.plot(neg.real, neg.imag, "b--", lw=0.8, label="omega < 0")
    k = len(pos) // 2
    if len(pos) > 2:
        ax.annotate("", xy=(pos[k + 1].real, pos[k + 1].imag), xytext=(pos[k].real, pos[k].imag),
                    arrowprops={"arrowstyle": "->", "color": "b"})
    ax.plot([-1.0], [0.0], "r+", ms=12, mew=2, label="(-1, 0)")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.axvline(0.0, color="k", lw=0.5)
    if zoom:
        ax.set_xlim(-zoom, zoom)
        ax.set_ylim(-zoom, zoom)
    ax.set_xlabel("Re G_o(j omega)")
    ax.set_ylabel("Im G_o(j omega)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, lw=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
