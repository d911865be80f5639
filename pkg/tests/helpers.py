"""Shared chart builders for the tests."""
from cyclicity.analysis import AnalysisOptions, analyze, nilpotent_chart
from cyclicity.cylinder import polar_lift
from cyclicity.expr import parse_system
from cyclicity.monodromy import NILPOTENT, classify_singularity
from cyclicity.presets import PRESETS


def chart(name, overrides=None):
    s = PRESETS[name].parsed(overrides)
    c = classify_singularity(s)
    if c.tag == NILPOTENT:
        return nilpotent_chart(c)[1]
    return polar_lift(s)


def chart_of(text):
    s = parse_system(text)
    c = classify_singularity(s)
    if c.tag == NILPOTENT:
        return nilpotent_chart(c)[1]
    return polar_lift(s)


def run(name, overrides=None, **opts):
    p = PRESETS[name]
    return analyze(p.parsed(overrides), p.candidate(overrides), AnalysisOptions(**opts), iif_text=p.iif)
