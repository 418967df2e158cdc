#include "flapsim/io.hpp"

#include "flapsim/errors.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flapsim::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary log assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'L', 'P', 'T', 'R', 'A', 'J', '1'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("binary trajectory truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) {
    throw ParseError("CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string table_to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError("CSV line " + std::to_string(n) + ": expected " + std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, n));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError("CSV has no header");
  return t;
}

void write_table(const std::string& path, const Table& table) { write_text(path, table_to_csv(table)); }

std::string trajectory_to_csv(const sim::Trajectory& traj) {
  Table t;
  t.header = traj.columns;
  const std::size_t nc = traj.columns.size();
  for (std::size_t r = 0; r < traj.rows; ++r) {
    t.rows.emplace_back(traj.data.begin() + r * nc, traj.data.begin() + (r + 1) * nc);
  }
  return table_to_csv(t);
}

sim::Trajectory trajectory_from_csv(const std::string& text) {
  const Table t = parse_csv(text);
  sim::Trajectory traj;
  traj.columns = t.header;
  traj.rows = t.rows.size();
  for (const auto& row : t.rows) traj.data.insert(traj.data.end(), row.begin(), row.end());
  return traj;
}

std::string trajectory_to_binary(const sim::Trajectory& traj) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(traj.columns.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(traj.rows));
  for (const auto& c : traj.columns) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.size()));
    out += c;
  }
  for (double v : traj.data) put<double>(out, v);
  return out;
}

sim::Trajectory trajectory_from_binary(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a binary trajectory (bad magic)");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kBinaryVersion) throw ParseError("unsupported binary trajectory version " + std::to_string(version));
  const auto nc = take<std::uint32_t>(bytes, pos);
  const auto nr = take<std::uint64_t>(bytes, pos);
  sim::Trajectory traj;
  for (std::uint32_t i = 0; i < nc; ++i) {
    const auto len = take<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw ParseError("binary trajectory truncated");
    traj.columns.emplace_back(bytes.data() + pos, len);
    pos += len;
  }
  if (nc && (bytes.size() - pos) / sizeof(double) / nc < nr) throw ParseError("binary trajectory truncated");
  traj.rows = static_cast<std::size_t>(nr);
  traj.data.resize(traj.rows * nc);
  for (double& v : traj.data) v = take<double>(bytes, pos);
  if (pos != bytes.size()) throw ParseError("trailing bytes after binary trajectory");
  return traj;
}

Table pitch_table(const sim::Trajectory& traj) {
  Table t{{"t", "theta_y"}, {}};
  const int ct = traj.column("t");
  const int cp = traj.column("theta_y");
  for (std::size_t r = 0; r < traj.rows; ++r) t.rows.push_back({traj.at(r, ct), traj.at(r, cp)});
  return t;
}

Table energy_table(const analysis::EnergyLedger& e) {
  Table t{{"t", "kinetic", "potential_gravity", "potential_spring", "total", "work_damping", "work_aero",
           "work_drive", "residual"},
          {}};
  for (std::size_t i = 0; i < e.t.size(); ++i) {
    t.rows.push_back({e.t[i], e.kinetic[i], e.gravity[i], e.spring[i], e.total[i], e.work_damping[i], e.work_aero[i],
                      e.work_drive[i], e.residual[i]});
  }
  return t;
}

Table wingtip_table(const Model& model, const sim::Trajectory& traj) {
  Table t{{"t", "x", "y", "z"}, {}};
  const auto& seg = model.segments[dyn::kLeftRadius];
  const Eigen::Vector3d tip(0.0, seg.root_offset + seg.span, 0.0);
  const int ct = traj.column("t");
  const int cx = traj.column("x");
  const int cphi = traj.column("phi_lh");
  const int cR = traj.column("R11");
  for (std::size_t r = 0; r < traj.rows; ++r) {
    dyn::DynamicState s;
    s.p = Eigen::Vector3d(traj.at(r, cx), traj.at(r, cx + 1), traj.at(r, cx + 2));
    for (int i = 0; i < 4; ++i) s.phi[i] = traj.at(r, cphi + i);
    for (int i = 0; i < 9; ++i) s.R(i / 3, i % 3) = traj.at(r, cR + i);
    const Eigen::Vector3d w = s.p + s.R * dyn::link_point(s, model.mass, dyn::kLeftRadius, tip).r;
    t.rows.push_back({traj.at(r, ct), w.x(), w.y(), w.z()});
  }
  return t;
}

Table strip_table(const sim::Trajectory& traj) {
  Table t{{"t", "strip", "alpha", "v_r", "lift", "drag"}, {}};
  for (const auto& s : traj.strips) t.rows.push_back({s.t, static_cast<double>(s.k), s.alpha, s.v_r, s.lift, s.drag});
  return t;
}

std::string sensitivity_to_csv(const std::vector<kin::SensitivityReport>& reports) {
  std::string out = "parameter,delta,max_dev_j5,rms_dev_j5,max_dev_j16,rms_dev_j16\n";
  for (const auto& r : reports) {
    out += r.parameter;
    for (double v : {r.delta, r.max_dev_j5, r.rms_dev_j5, r.max_dev_j16, r.rms_dev_j16}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

Table trace_table(const opt::OptimizationResult& result) {
  Table t{{"iteration", "candidate", "J", "penalized"}, {}};
  const int n = result.trace.empty() ? 0 : static_cast<int>(result.trace.front().x.size());
  for (int i = 0; i < n; ++i) t.header.push_back("x" + std::to_string(i));
  for (const auto& row : result.trace) {
    std::vector<double> v{static_cast<double>(row.iteration), static_cast<double>(row.candidate), row.J,
                          row.penalized ? 1.0 : 0.0};
    for (int i = 0; i < n; ++i) v.push_back(row.x[i]);
    t.rows.push_back(std::move(v));
  }
  return t;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json limit_cycle_json(const analysis::LimitCycleReport& r) {
  Json j;
  j["detected"] = r.detected;
  j["period_s"] = r.period;
  j["transient_end_s"] = r.transient_end;
  j["crossings"] = r.crossing_times.size();
  j["last_distance"] = r.distances.empty() ? 0.0 : r.distances.back();
  return j;
}

Json energy_json(const analysis::EnergyLedger& e) {
  Json j;
  j["samples"] = e.t.size();
  j["scale_j"] = e.scale;
  j["max_abs_residual_j"] = e.max_abs_residual;
  j["max_rel_residual"] = e.max_rel_residual;
  return j;
}

Json cost_json(const cost::CostResult& c) {
  Json j;
  j["J"] = c.J;
  j["penalized"] = c.penalized;
  j["samples"] = c.samples;
  if (c.penalized) {
    j["failure"] = error_code_name(c.failure);
    j["failure_time_s"] = c.failure_time;
    j["message"] = c.message;
  }
  return j;
}

Json optimization_json(const opt::OptimizationResult& r) {
  Json j;
  j["method"] = r.method;
  j["best_x"] = vector_json(r.best_x);
  j["best_J"] = r.best_J;
  j["best_penalized"] = r.best_penalized;
  j["evaluations"] = r.evaluations;
  j["converged"] = r.converged;
  j["budget_exhausted"] = r.budget_exhausted;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace flapsim::io
