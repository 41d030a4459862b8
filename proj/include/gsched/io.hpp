#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "gsched/closed_loop.hpp"
#include "gsched/controller.hpp"
#include "gsched/lpv_core.hpp"
#include "gsched/lyapunov_cert.hpp"

namespace gsched::io {

using Json = nlohmann::ordered_json;

struct Model {
    std::string name;
    LinearFamily family;
    ControllerConfig controller;
    // Weighting matrix listed with the published controller parameters. Carried
    // through for fidelity; no computation consumes it.
    std::optional<MatX> q_weight;

    // Knot index by label, falling back to `fallback` when the label is absent.
    [[nodiscard]] std::size_t knot_index(const std::string& label, std::size_t fallback) const;
};

// Parses and validates a model. Points must be sorted by alpha_star and, unless
// `require_hurwitz` is false, every A must be Hurwitz. Throws ConfigError naming
// the offending point.
[[nodiscard]] Model model_from_json(const Json& j, bool require_hurwitz = true);
[[nodiscard]] Model load_model(const std::filesystem::path& path, bool require_hurwitz = true);
[[nodiscard]] Json model_to_json(const Model& m);

[[nodiscard]] Json controller_to_json(const ControllerConfig& c);

[[nodiscard]] Scenario scenario_from_json(const Json& j);
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] Json scenario_to_json(const Scenario& s);

struct CertificateFile {
    MatX P;
    std::optional<LyapunovCertificate> certificate; // full record when present
    std::string status;
};

[[nodiscard]] Json certificate_to_json(const LyapunovCertificate& c, const VertexSet& vertices,
                                       Feasibility status, const ControllerConfig& cfg);
[[nodiscard]] CertificateFile certificate_from_json(const Json& j);
[[nodiscard]] CertificateFile load_certificate(const std::filesystem::path& path);

// Matrix given as a JSON array of rows.
[[nodiscard]] MatX matrix_from_json(const Json& j, const std::string& what);
[[nodiscard]] Json matrix_to_json(const MatX& m);

[[nodiscard]] Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// Shortest round-trip decimal for a double (locale independent).
[[nodiscard]] std::string format_double(double v);

// CSV with one header row and one row per sample; column order is fixed and
// documented in the README. V/V_dot columns appear only for traces with an
// attached Lyapunov matrix.
void write_trace_csv(std::ostream& os, const SimTrace& trace);
void write_scan_csv(std::ostream& os, const HurwitzScan& scan);
void write_margin_csv(std::ostream& os, const VertexSet& vertices, const std::vector<double>& margins);

} // namespace gsched::io
