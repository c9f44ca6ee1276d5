#pragma once

#include <string>
#include <utility>
#include <vector>

// Read-only documentation served inside the agent workspace, plus the
// canonical system prompt and the runtime guidance block. All strings here
// are wire format: sessions embed them verbatim, so edits change prompt
// hashes in recorded traces.

namespace articraft::docs {

inline constexpr const char* kModelFile = "model.apl";

// Seed written to the model file when a session starts without an initial
// program. It intentionally fails compilation (no object declared) so the
// first compile cannot satisfy the termination rule by accident.
inline constexpr const char* kSeedProgram = "build {\n}\n";

inline constexpr const char* kQuickstart =
    R"DOC(# Quickstart

## Purpose
Use this page to start a new asset program. It defines the required program
contract, the authoring workspace rules, and one minimal end-to-end example.

## Virtual Workspace
- `model.apl` is the only writable file.
- `docs/references/quickstart.md` is this always-loaded entrypoint.
- Everything under `docs/` is read-only language guidance.
- Use `read_file(path=...)` to load exact reference text only when needed.

## Mounted Reference Layout
Always available in `docs/references/`:
- `quickstart.md`
- `errors.md`
- `language.md`
- `core-types.md`
- `articulated-object.md`
- `probe-tooling.md`
- `testing.md`

## Program Contract
Every program is one `model.apl` file containing:
- a `build { ... }` block that declares `object("name")` first, then parts,
  visuals, inertials, and joints;
- an optional `tests { ... }` block holding prompt-specific checks and
  explicit allowances. The tests block must come after the build block.

## Minimal Example
```
build {
  object("stool");
  part("leg");
  visual("leg", cylinder(radius=0.02, length=0.45),
         origin=[0, 0, 0.225], name="leg_post",
         material="steel", rgba=[0.6, 0.62, 0.65, 1]);
  part("seat");
  visual("seat", cylinder(radius=0.15, length=0.03),
         origin=[0, 0, 0.465], name="seat_disc",
         material="wood", rgba=[0.6, 0.45, 0.3, 1]);
  joint("seat_mount", "fixed", "leg", "seat");
}
tests {
  expect_contact("leg", "seat");
  check("seat height", abs(aabb("seat")[1][2] - 0.48) < 0.001);
}
```
)DOC";

inline constexpr const char* kLanguage =
    R"DOC(# Language

`model.apl` is a small deterministic language: no imports, no I/O, no
randomness, no user-defined functions. Every run of the same program produces
the same asset.

## Statements
- `let name = expr;` binds a value in the current scope.
- `repeat i in 0..4 { ... }` runs the body with `i` = 0,1,2,3 (upper bound
  exclusive). Bounds must be integer literals; at most 256 iterations.
- `name(arg, key=value, ...);` calls a builtin. Positional arguments fill
  parameters in declared order and must come before named arguments.
- `// comment` runs to end of line.

## Expressions
- Numbers (`0.45`, `1e-3`), strings (`"lid"`, escapes `\n \t \" \\`), and
  vectors `[x, y, z]` (any length, mixed element kinds).
- Indexing `v[0]`; nesting `m[1][2]`.
- Arithmetic `+ - * /` (plus `+` as string concatenation), comparisons
  `== != < > <= >=`, logic `&& || !`, unary `-`. Booleans are numbers:
  0 is false, anything else is true.
- Builtins `sin(x)`, `cos(x)`, `sqrt(x)`, `abs(x)`, `min(a, b)`, `max(a, b)`,
  `str(x)`; constant `pi`.

## Scopes
`repeat` bodies open a child scope: bindings made inside disappear after the
loop, but bindings from enclosing scopes stay visible. Top-level `let`
bindings remain visible to the tests block.
)DOC";

inline constexpr const char* kCoreTypes =
    R"DOC(# Core Types

## Geometry Constructors
All primitives are centered on the part-frame origin with Z as the symmetry
axis. Dimensions are meters.

- `box(size)` — `size` is `[x, y, z]` edge lengths.
- `cylinder(radius, length)` — length along Z.
- `sphere(radius)`
- `cone(r_bottom, r_top, length)` — either radius may be 0 for an apex.
- `capsule(radius, length)` — `length` is the cylindrical section; total
  height is `length + 2 * radius`.

## Procedural Generators
Higher-level watertight meshes for common mechanisms:

- `wheel(radius=0.1, width=0.04, spokes=6, bore=0, segments=64)` —
  spoked wheel in the XY plane, axle along Z; `bore` > 0 opens a hub hole.
- `barrel_hinge(leaf_length=0.06, leaf_width=0.08, leaf_thickness=0.004,
  barrel_radius=0.008, barrel_length=0.09, piece="assembly", segments=32)` —
  `piece` selects `"leaf"`, `"barrel"`, or `"assembly"`.
- `perforated_panel(size=[0.2, 0.1, 0.005], cols=3, rows=2, hole_radius=0.01,
  segments=64)` — plate with a grid of circular holes.
- `tube(points, radius=0.01, segments=64)` — swept circular profile along a
  polyline of `[x, y, z]` points.

`segments` defaults to the compile tessellation (64) when omitted.

## Materials
Declared implicitly at first use on a visual:
`visual(..., material="brass", rgba=[0.7, 0.6, 0.3, 1])` registers the color
under that name; later visuals can say `material="brass"` alone. Passing a
different rgba for an existing name is an error. An `rgba` without a
`material` name registers `<visual_name>_color`.
)DOC";

inline constexpr const char* kArticulatedObject =
    R"DOC(# Articulated Object

## Construction Calls
- `object(name)` — must be the first construction call; exactly one per
  program.
- `part(name)` — declares a rigid body. Part names are the public handles
  used by joints, tests, and probes.
- `visual(part, geometry, name, origin=[0,0,0], rpy=[0,0,0], material=,
  rgba=)` — attaches geometry to a part. `origin`/`rpy` place the geometry in
  the part frame (radians, extrinsic XYZ).
- `inertial(part, geometry, mass, origin=, rpy=)` — derives mass, center of
  mass, and the inertia tensor from the given geometry at the given placement.
- `joint(name, type, parent, child, origin=, rpy=, axis=[0,0,1], lower=,
  upper=, effort=, velocity=, mimic=, multiplier=1, offset=0)` — connects two
  parts. `origin`/`rpy` place the child frame in the parent frame; `axis` is
  in the child frame and is normalized automatically.

## Joint Types and Limits
- `"revolute"` — rotation in radians; `lower` and `upper` are required.
- `"prismatic"` — translation in meters; `lower` and `upper` are required.
- `"continuous"` — unbounded rotation; must NOT have `lower`/`upper`, may
  carry `effort`/`velocity` ratings.
- `"fixed"` — rigid attachment; no limit parameters allowed.

When a revolute or prismatic joint omits `effort` or `velocity`, the compiler
defaults them (effort 10, velocity 1) and reports a `default_applied` note.

## Mimic Joints
`mimic="source_joint"` slaves a joint to another:
`value = multiplier * source_value + offset`. Mimic joints cannot be posed
directly in tests or probes; pose the source joint instead.

## The Kinematic Tree
Joints must form a tree: one root part, every child part reached by exactly
one joint, no cycles. Parts with no joints are free parts; baseline QC treats
a free part resting against the grounded body as connected, and flags truly
floating parts.
)DOC";

inline constexpr const char* kProbeTooling =
    R"DOC(# Probe Tooling

`probe_model` is an inspection-only tool for running a short expression
against the current compiled asset. No file writes, no object mutation. The
asset must have compiled at least once (geometry is available even when QC or
authored tests failed).

## Query Builtins
- `parts()` — every part with its visual names and mass (null when no
  inertial is set).
- `joints()` — every joint with type, parent, child, origin, axis, limits,
  and mimic.
- `world_position(part, pose=?)` — the part-frame origin in world meters.
- `aabb(part, pose=?)` — axis-aligned bounds `{min, max}` of the part.
- `distance(a, b, pose=?)` — minimum surface distance between two parts
  (0 when touching or overlapping).
- `volume(part)` — enclosed volume of the part's merged geometry in m^3.
- `catalog()` — this builtin list.
- Math helpers `sin`, `cos`, `sqrt`, `abs`, `min`, `max`, `str`, and `pi`.

## Pose Argument
`pose=[["joint_name", value], ...]` evaluates the query at that joint
configuration instead of the rest pose, e.g.
`aabb("door", pose=[["door_hinge", pi / 2]])`.

## Output and Errors
Successful probes print a JSON document. Faults report one of:
- `[probe_syntax_error]` — malformed query or wrong argument shape.
- `[unknown_symbol]` — unknown builtin, part, joint, or identifier.
- `[probe_budget_exceeded]` — query exceeded the evaluation step budget.
)DOC";

inline constexpr const char* kTesting =
    R"DOC(# Testing

The `tests { ... }` block records prompt-specific checks and explicit
allowances. `compile_model` owns the baseline QC pass (floating parts,
unintended overlaps, joint sanity, naming lint); use tests for exact checks
the prompt implies and for justified exemptions.

## Directives
- `expect_contact(a, b, tol=0.0005)` — parts touch within tolerance.
- `expect_gap(a, b, min_gap=, max_penetration=)` — parts stay separated; an
  optional penetration budget tolerates shallow seated contact.
- `expect_overlap(a, b)` — parts genuinely share interior volume.
- `expect_within(inner, outer)` — the inner part stays inside the outer
  part's solid.
- `check(label, expr)` — any boolean expression over measurements:
  `world_position(part)`, `aabb(part)` (a `[min, max]` pair of `[x, y, z]`
  vectors), and `distance(a, b)`, plus build bindings and math builtins.

## Pose Blocks
`pose { joint_a: value, joint_b: value } { ...directives... }` evaluates the
enclosed directives at that joint configuration. Pose blocks nest; inner
bindings override outer ones. Only real, non-fixed, non-mimic joints can be
posed; values clamp into the joint's limits.

## Allowances
- `allow_overlap(a, b, elem_a=?, elem_b=?, reason="...")` — accepts an
  intentional overlap between two parts, optionally scoped to one visual
  element pair. Scoped allowances must jointly cover every overlapping
  element pair to suppress the finding.
- `allow_isolated_part(part, reason="...")` — accepts an intentionally
  unconnected part.

Every allowance needs a non-empty reason. A used allowance demotes exactly
the matching QC failure to a note that quotes the reason; an unused allowance
emits nothing. Pair every allowance with at least one exact proof check such
as `expect_within`, `expect_overlap`, `expect_gap(..., max_penetration=...)`,
`expect_contact`, or a decisive pose check.

## Reading compile_signals
Each compile returns a `<compile_signals>` block: a summary line
(`status=... failures=... warnings=... notes=...`), then `<failures>`,
`<warnings>`, and `<notes>` sections with one `- [code] message` line per
finding, then `<response_rules>` guidance. Failures block success; warnings
and notes never do.
)DOC";

inline constexpr const char* kErrors =
    R"DOC(# Errors

## Build-time fault codes
- `syntax_error` — the program does not parse; the message carries
  line/column.
- `invalid_params` — a call is malformed: unknown builtin, missing or
  unknown argument, bad value (also covers vector index out of range).
- `type_mismatch` — an expression produced the wrong kind of value.
- `undefined_identifier` — name used before any `let` binding.
- `division_by_zero`, `loop_bound_exceeded` — expression faults.
- `duplicate_part_name`, `duplicate_visual_name`, `duplicate_joint_name`,
  `unknown_part`, `unknown_joint`, `self_joint`, `zero_axis`,
  `invalid_geometry`, `invalid_mass`, `material_conflict` — construction
  faults.
- `limits_required` — revolute/prismatic joint without `lower`/`upper`.
- `limits_forbidden` — position limits on a continuous or fixed joint.
- `unknown_part_in_test`, `unknown_joint_in_pose`, `fixed_joint_in_pose`,
  `mimic_set_directly`, `allowance_missing_reason` — tests-block faults.

## Compile finding codes
- Failures: `parse_error`, `runtime_error`, `isolated_part`, `overlap`,
  `joint_limits_invalid`, `test_failure`.
- Warnings: `disconnected_geometry`, `naming_lint`.
- Notes: `allowed_overlap`, `allowed_isolated_part`, `default_applied`.

## Probe fault codes
`probe_syntax_error`, `unknown_symbol`, `probe_budget_exceeded`.
)DOC";

inline const std::vector<std::pair<std::string, std::string>>& reference_tree() {
    static const std::vector<std::pair<std::string, std::string>> tree = {
        {"docs/references/quickstart.md", kQuickstart},
        {"docs/references/errors.md", kErrors},
        {"docs/references/language.md", kLanguage},
        {"docs/references/core-types.md", kCoreTypes},
        {"docs/references/articulated-object.md", kArticulatedObject},
        {"docs/references/probe-tooling.md", kProbeTooling},
        {"docs/references/testing.md", kTesting},
    };
    return tree;
}

// User message 1: the workspace-and-documentation packet. Not the task
// prompt; it mounts the read-only tree and preloads three references.
inline std::string documentation_packet() {
    std::string out =
        "# Workspace Documentation (read-only)\n"
        "The virtual workspace exposes `model.apl` as the editable asset program and `docs/`\n"
        "as read-only language guidance.\n"
        "`docs/references/quickstart.md` is the preloaded entrypoint and reference index.\n"
        "Use `read_file(path=...)` with these virtual paths when you need exact text.\n"
        "\n"
        "## docs/references/quickstart.md\n";
    out += kQuickstart;
    out += "\n## docs/references/probe-tooling.md\n";
    out += kProbeTooling;
    out += "\n## docs/references/testing.md\n";
    out += kTesting;
    return out;
}

// The opening of user message 2, ahead of the object prompt.
inline constexpr const char* kRuntimeTaskGuidance =
    R"DOC(<runtime_task_guidance>
- Read the current `model.apl` before editing.
- Make one small coherent change at a time.
- Treat visual realism as part of the deliverable: make the object read clearly as the requested thing, with believable proportions, silhouette, colors/materials, and major visible surface treatment.
- Run `compile_model` to check your latest revision.
- If compile is clean and you cannot name one specific remaining defect, conclude.
</runtime_task_guidance>
)DOC";

inline std::string system_prompt() {
    return R"DOC(<role>
- You are ArticraftAgent. You generate articulated 3D objects by editing the bound program file with tools.
- You work in a sandboxed virtual workspace with one writable file: `model.apl`. The read-only `docs/` tree contains canonical language guidance. Do not inspect, modify, or depend on anything outside this virtual workspace. Do not try to manage asset paths, compilation, materialization, serving, or runtime infrastructure. Articraft handles all of that automatically.
- Success means the artifact passes validation AND reads clearly as the requested object.
- Four hard requirements drive every decision:
  1. REALISTIC GEOMETRY — this is the dominant quality bar. Choose the representation that best matches the real form. Use simple primitives when they are genuinely correct; use procedural generators (wheels, hinges, perforated panels, swept tubes) when the shape needs them. Objects that are hollow in reality (cups, bowls, enclosures, housings) should be modeled hollow, not solid. Use real-world absolute dimensions (e.g. a chair seat ~0.45 m high, a grill ~1 m tall) — do not guess at arbitrary small scales. Assign plausible colors and materials to major visible surfaces unless the prompt clearly calls for an uncolored prototype or abstract study, and avoid leaving major visible surfaces with generic placeholder defaults. Match the tool to the object, with visual realism and mechanical credibility as the priority.
  2. ARTICULATE THE PRIMARY MECHANISMS — model the primary user-facing articulations. Do not invent secondary articulations unless they are visually or mechanically salient to the object. On appliances, electronics, instruments, and other control-heavy objects, buttons, knobs, switches, keys, levers, pedals, and other distinct visible user controls should be articulated whenever the real object presents them as separate movable parts. Static fused control panels are usually the wrong choice when the real object clearly has distinct visible controls. Each articulation you do include should have realistic motion limits matching the real mechanism.
  3. NO FLOATING PARTS — every part must be physically connected or mounted, and each part must itself read as one supported assembly rather than disconnected floating subpieces. If a feature reads separate, give it the real support that carries it: a bridge, bracket, wall, shaft, hinge barrel, boss, frame contact, or housing connection. Intentional floating (e.g. drone propellers mid-flight) requires explicit justification in tests.
  4. NO UNINTENTIONAL OVERLAPS — prefer real separation when parts should be distinct, but small local hidden overlap is acceptable when it improves mechanical realism for nesting, capture, compression, or seated insertion. Keep intentional overlap local and element-scoped when possible, and never use it to hide a wrong articulation origin, axis, or limit. When the design truly intends overlap, justify it explicitly in tests with scoped allowances instead of forcing artificial separation.
- Use compile output, QC, and tests as sensors — not optimization targets.
- Examples are admissible only for reusable ideas; full structural imitation is disallowed.
- Never answer with code directly in the assistant response. Apply code changes through tools only.
- Do not ask the user for feedback, confirmation, or permission to continue. Finish the task autonomously unless a hard blocker prevents progress.
</role>

<link_naming>
- Link names are part of the deliverable quality bar: keep them concise, semantic, and grounded in the object's intrinsic frame rather than arbitrary or state-based labels.
- Give each link an extremely concise semantic name: ideally just the part name, plus a short intrinsic location or shape cue only when needed to distinguish similar parts.
- Keep every link name to a single underscore-joined string with at most 5 words.
- Do not encode articulation state in link names. Avoid state words such as `open`, `closed`, `extended`, `pulled_out`, `ajar`, `tilted`, or `rotated`.
- Prefer names that say what the part is and, when helpful, what shape it has.
- Use location words only when the object has a meaningful canonical orientation or another clear object-intrinsic reference frame.
- When similar parts are reliably distinguishable, prefer object-intrinsic spatial cues such as `front_handle` or `side_support`.
- Do not invent `left`, `right`, `front`, or `back` distinctions for symmetric or orientation-ambiguous objects. Some objects have only a partial intrinsic frame: a humanoid part can be `left_arm`, but the two doors of a symmetric cabinet usually should not be `left_door` and `right_door`.
- If only part of the intrinsic frame is meaningful, use only that part. For example, if `front` and `back` are meaningful but `left` and `right` are ambiguous, use `front_*` or `rear_*` when needed and do not force side labels.
- If repeated parts are semantically identical and not intrinsically distinguishable, reuse the same base name and add numeric suffixes such as `door_0`, `door_1`. For 2D repeated layouts, names like `key_0_0`, `key_0_1` are acceptable.
</link_naming>

<tools>
- Available tools: `read_file`, `apply_patch`, `replace`, `write_file`, `find_examples`, `compile_model`, and `probe_model`.
- `read_file` reads exact virtual workspace file text.
- `apply_patch` applies context-hunk patch text to `model.apl`.
- `replace` swaps an exact literal string for another, with an expected occurrence count.
- `write_file` overwrites `model.apl` wholesale; prefer targeted edits once a program exists.
- `compile_model` runs compile + QC and returns structured `<compile_signals>`.
- `probe_model` is a read-only inspection query; no file writes, no object mutation.
- `find_examples` searches curated examples for patterns. Adapt results against current docs and do not mechanically copy example code; entries marked `[weakly relevant]` are inspiration-only.
- Read exact current file text with `read_file(path="model.apl")` before you patch.
- Prefer several small edits over one giant patch or full-file rewrite.
- Modify the existing editable code rather than assuming a blank start.
</tools>

<modeling>
GEOMETRY
- Keep one `build { ... }` block and at most one `tests { ... }` block as the program skeleton.
- Prefer native primitives and procedural generators when they represent the form credibly.
- Use procedural generators for the parts that need richer structure, such as spoked wheels, hinge assemblies, perforated grilles, or swept tubing; mix approaches freely.
- Match the visible construction logic of the object. If a face should read as one continuous manufactured piece, keep it as a connected face with openings or cutouts instead of rebuilding it from separate floating members. Use separate member-based construction only when the visible form should genuinely read as discrete members.
- Author visual geometry only; collision geometry is derived downstream.
- Preserve correct joint origins, axes, limits, and articulation behavior.

TESTING
- Let `compile_model` own the baseline sanity/QC pass.
- Use the `tests` block for prompt-specific exact checks, targeted pose checks, and explicit allowances only.
- Treat overlap findings as classification tasks first: decide whether the reported intersection is intentional design embedding that should be covered by a scoped `allow_overlap(...)`, or an unintended collision that needs geometry, mount, or pose changes. Accepted intentional cases include proxy nesting, captured pins or shafts, seated trim, and compliant compression.
- Pair every `allow_overlap(...)` with at least one exact proof check such as `expect_within(...)`, `expect_overlap(...)`, `expect_gap(..., max_penetration=...)`, `expect_contact(...)`, or a decisive pose check.
</modeling>
)DOC";
}

}  // namespace articraft::docs
