"""Simulator of a light-sensitive BZ liquid-marble photosensor.

Two-variable activator/inhibitor kinetics on a disc lattice, virtual
electrode pairs, illumination schedules, and spike-train analysis.
"""

from .analysis import (
    ClassificationError,
    SpikeStats,
    SpikeTrain,
    StimulusResponse,
    classify_response,
    detect_spikes,
    merged_spike_steps,
    period_stats,
)
from .kinetics import (
    BlowUpError,
    MarbleState,
    SimParams,
    euler_step,
    find_homogeneous_fixed_point,
    homogeneous_state,
    reaction_u,
    reaction_v,
    rest_state,
)
from .lattice import (
    DomainMask,
    ScalarField,
    build_disc,
    field_to_csv,
    laplacian5,
    total_mass,
    write_pgm,
)
from .probes import (
    ElectrodeProbe,
    PotentialTrace,
    measure_potential,
    read_trace_csv,
    record,
    write_trace_csv,
)
from .scenario import (
    ConfigError,
    RunArtifacts,
    ScanResult,
    ScenarioConfig,
    echo_config,
    parse_config,
    propagation_test,
    run_scenario,
    scan_phi,
)
from .stimulation import (
    ExcitationSource,
    SourceManager,
    StimulusSchedule,
    advance_sources,
    excite,
    phi_at,
)

__version__ = "0.1.0"
