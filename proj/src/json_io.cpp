#include "fsk/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace fsk {

namespace {

using nlohmann::json;

void escape_into(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    throw NumericalIntegrity("refusing to serialize non-finite value");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void JsonWriter::write_indent() {
  out_ += '\n';
  out_.append(2 * stack_.size(), ' ');
}

void JsonWriter::prefix_value() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  Frame& f = stack_.back();
  if (f.count > 0) out_ += f.is_object ? "," : ", ";
  if (f.is_object) write_indent();
  ++f.count;
}

JsonWriter& JsonWriter::begin_object() {
  prefix_value();
  out_ += '{';
  stack_.push_back({true, 0});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = stack_.back().count == 0;
  stack_.pop_back();
  if (!empty) write_indent();
  out_ += '}';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  prefix_value();
  out_ += '[';
  stack_.push_back({false, 0});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  stack_.pop_back();
  out_ += ']';
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  Frame& f = stack_.back();
  if (f.count > 0) out_ += ',';
  write_indent();
  ++f.count;
  out_ += '"';
  escape_into(out_, k);
  out_ += "\": ";
  pending_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  prefix_value();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(long long v) {
  prefix_value();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(int v) { return value(static_cast<long long>(v)); }

JsonWriter& JsonWriter::value(bool v) {
  prefix_value();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  prefix_value();
  out_ += '"';
  escape_into(out_, v);
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::value(const char* v) { return value(std::string(v)); }

JsonWriter& JsonWriter::null_value() {
  prefix_value();
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::value(const Matrix<double>& m) {
  begin_array();
  for (Index i = 0; i < m.rows(); ++i) {
    begin_array();
    for (Index j = 0; j < m.cols(); ++j) value(m(i, j));
    end_array();
  }
  end_array();
  return *this;
}

JsonWriter& JsonWriter::value(const Vector<double>& v) {
  begin_array();
  for (Index i = 0; i < v.size(); ++i) value(v[i]);
  end_array();
  return *this;
}

std::string JsonWriter::str() const { return out_ + "\n"; }

// --- model files -----------------------------------------------------------

namespace {

long long require_count(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_number_integer()) {
    throw ParseError(std::string("model: \"") + name +
                     "\" must be an integer");
  }
  const long long v = j[name].get<long long>();
  if (v <= 0) {
    throw ParseError(std::string("model: \"") + name + "\" must be positive");
  }
  return v;
}

Matrix<double> require_matrix(const json& j, const char* name, Index rows,
                              Index cols) {
  if (!j.contains(name) || !j[name].is_array() ||
      Index(j[name].size()) != rows) {
    throw ParseError(std::string("model: \"") + name + "\" must be an array of " +
                     std::to_string(rows) + " rows");
  }
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[name][i];
    if (!row.is_array() || Index(row.size()) != cols) {
      throw ParseError(std::string("model: \"") + name + "\" row " +
                       std::to_string(i) + " must have " +
                       std::to_string(cols) + " entries");
    }
    for (Index k = 0; k < cols; ++k) {
      if (!row[k].is_number()) {
        throw ParseError(std::string("model: \"") + name +
                         "\" contains a non-numeric entry");
      }
      m(i, k) = row[k].get<double>();
      if (!std::isfinite(m(i, k))) {
        throw ParseError(std::string("model: \"") + name +
                         "\" contains a non-finite entry");
      }
    }
  }
  return m;
}

Vector<double> require_vector(const json& j, const char* name, Index len) {
  if (!j.contains(name) || !j[name].is_array() ||
      Index(j[name].size()) != len) {
    throw ParseError(std::string("model: \"") + name + "\" must be an array of " +
                     std::to_string(len) + " numbers");
  }
  Vector<double> v(len);
  for (Index i = 0; i < len; ++i) {
    if (!j[name][i].is_number()) {
      throw ParseError(std::string("model: \"") + name +
                       "\" contains a non-numeric entry");
    }
    v[i] = j[name][i].get<double>();
    if (!std::isfinite(v[i])) {
      throw ParseError(std::string("model: \"") + name +
                       "\" contains a non-finite entry");
    }
  }
  return v;
}

}  // namespace

FactorModeld parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    // parse errors proper, but also e.g. number overflow on 1e999
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ParseError("model: top level must be an object");
  }
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "p" && k != "q" && k != "lambda" && k != "phi" && k != "psi2") {
      throw ParseError("model: unknown key \"" + k + "\"");
    }
  }
  const Index p = Index(require_count(j, "p"));
  const Index q = Index(require_count(j, "q"));

  FactorModeld m;
  m.lambda = require_matrix(j, "lambda", p, q);
  const Matrix<double> phi = require_matrix(j, "phi", q, q);
  try {
    m.phi = SymMatrixd(phi);
  } catch (const NotSymmetric&) {
    throw InvalidModel("phi must be symmetric");
  }
  m.psi2 = require_vector(j, "psi2", p);
  return m;
}

FactorModeld load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open model file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str());
}

std::string model_to_json(const FactorModeld& m) {
  JsonWriter w;
  w.begin_object();
  w.key("p").value(static_cast<long long>(m.p()));
  w.key("q").value(static_cast<long long>(m.q()));
  w.key("lambda").value(m.lambda);
  w.key("phi").value(m.phi.m());
  w.key("psi2").value(m.psi2);
  w.end_object();
  return w.str();
}

// --- CLI documents ---------------------------------------------------------

namespace {

void write_header(JsonWriter& w, const std::string& command) {
  w.key("schema_version").value(kSchemaVersion);
  w.key("command").value(command);
}

void write_pairwise(JsonWriter& w, const Matrix<double>& blcu_bl,
                    const Matrix<double>& dblcp_bl,
                    const Matrix<double>& blcu_dblcp) {
  w.key("pairwise_correlations").begin_object();
  w.key("blcu_bl").value(blcu_bl);
  w.key("dblcp_bl").value(dblcp_bl);
  w.key("blcu_dblcp").value(blcu_dblcp);
  w.end_object();
}

}  // namespace

std::string document_validate(const std::optional<ModelDiagnostics<double>>& d,
                              const std::string& error) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "validate");
  w.key("valid").value(d.has_value());
  if (d) {
    w.key("diagnostics").begin_object();
    w.key("sigma_condition_number").value(d->sigma_condition_number);
    w.key("min_psi2").value(d->min_psi2);
    w.key("min_phi_eigenvalue").value(d->min_phi_eigenvalue);
    w.key("flags").begin_array();
    for (const auto& f : d->flags) w.value(f);
    w.end_array();
    w.end_object();
  } else {
    w.key("error").value(error);
  }
  w.end_object();
  return w.str();
}

std::string document_transform(const TransformedModel<double>& tm,
                               double eq13_offdiag_residual,
                               double eq13_diag_residual,
                               double sigma_preservation_residual) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "transform");
  w.key("p").value(static_cast<long long>(tm.original.p()));
  w.key("q").value(static_cast<long long>(tm.original.q()));
  w.key("lambda_star").value(tm.lambda_star);
  w.key("phi_star").value(tm.phi_star.m());
  w.key("t").value(tm.t);
  w.key("eq13_offdiag_residual").value(eq13_offdiag_residual);
  w.key("eq13_diag_residual").value(eq13_diag_residual);
  w.key("sigma_preservation_residual").value(sigma_preservation_residual);
  w.end_object();
  return w.str();
}

std::string document_pipeline(const PipelineReport<double>& r, Index p) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "pipeline");
  w.key("p").value(static_cast<long long>(p));
  w.key("q").value(static_cast<long long>(r.q));
  w.key("warnings").begin_array();
  for (const auto& s : r.warnings) w.value(s);
  w.end_array();
  w.key("eq13_residual").value(r.eq13_residual);
  w.key("eq21_residual").value(r.eq21_residual);
  w.key("sl_fit_residual").value(r.sl_fit_residual);
  w.key("sigma_reconstruction_residual").value(r.sigma_reconstruction_residual);
  w.key("max_deviation_from_identity").value(r.max_deviation_from_identity);
  if (r.r_blcu_bl.size() > 0) {
    write_pairwise(w, r.r_blcu_bl, r.r_dblcp_bl, r.r_blcu_dblcp);
  } else {
    w.key("pairwise_correlations").null_value();
  }
  if (r.transformed) {
    w.key("lambda_star").value(r.transformed->lambda_star);
    w.key("phi_star").value(r.transformed->phi_star.m());
    w.key("t").value(r.transformed->t);
  } else {
    w.key("lambda_star").null_value();
    w.key("phi_star").null_value();
    w.key("t").null_value();
  }
  if (r.second_order) {
    w.key("lambda2").value(r.second_order->lambda2);
    w.key("psi2_2").value(r.second_order->psi2_2);
    w.key("second_order_iterations").value(r.second_order->iterations);
  } else {
    w.key("lambda2").null_value();
    w.key("psi2_2").null_value();
    w.key("second_order_iterations").null_value();
  }
  if (r.schmid_leiman) {
    w.key("lambda_sl").value(r.schmid_leiman->lambda_sl);
    w.key("lambda_slp").value(r.schmid_leiman->lambda_slp);
  } else {
    w.key("lambda_sl").null_value();
    w.key("lambda_slp").null_value();
  }
  w.end_object();
  return w.str();
}

std::string document_predictors(const PredictorsDocument& doc) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "predictors");
  w.key("p").value(static_cast<long long>(doc.p));
  w.key("q").value(static_cast<long long>(doc.q));
  w.key("predictors").begin_object();
  const std::pair<const char*, const PredictorDoc*> kinds[] = {
      {"bl", &doc.bl}, {"blcu", &doc.blcu}, {"dblcp", &doc.dblcp}};
  for (const auto& [name, pd] : kinds) {
    w.key(name).begin_object();
    w.key("weights").value(pd->weights);
    w.key("covariance").value(pd->covariance);
    w.key("validity").value(pd->validity);
    w.end_object();
  }
  w.end_object();
  write_pairwise(w, doc.r_blcu_bl, doc.r_dblcp_bl, doc.r_blcu_dblcp);
  w.end_object();
  return w.str();
}

std::string document_verify(const VerifyDocument& doc) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "verify");
  w.key("phi_identity_residual").value(doc.phi_identity_residual);
  w.key("gram_offdiag_residual").value(doc.gram_offdiag_residual);
  w.key("precondition_met").value(doc.precondition_met);
  w.key("max_deviation_from_identity").value(doc.max_deviation_from_identity);
  write_pairwise(w, doc.r_blcu_bl, doc.r_dblcp_bl, doc.r_blcu_dblcp);
  w.key("status").value(doc.status);
  w.end_object();
  return w.str();
}

std::string document_simulate(const SimulateDocument& doc) {
  JsonWriter w;
  w.begin_object();
  write_header(w, "simulate");
  w.key("n").value(doc.n);
  w.key("seed").value(doc.seed);
  w.key("rng_version").value(kRngVersion);
  w.key("pairs").begin_array();
  for (const auto& pr : doc.pairs) {
    w.begin_object();
    w.key("a").value(pr.a);
    w.key("b").value(pr.b);
    w.key("empirical").value(pr.empirical);
    w.key("closed_form").value(pr.closed_form);
    w.key("max_abs_diff").value(pr.max_abs_diff);
    w.end_object();
  }
  w.end_array();
  w.key("validities").begin_array();
  for (const auto& v : doc.validities) {
    w.begin_object();
    w.key("kind").value(v.kind);
    w.key("empirical").value(v.empirical);
    w.key("closed_form").value(v.closed_form);
    w.key("max_abs_diff").value(v.max_abs_diff);
    w.end_object();
  }
  w.end_array();
  w.key("max_abs_discrepancy").value(doc.max_abs_discrepancy);
  w.end_object();
  return w.str();
}

std::string document_error(const std::string& command,
                           const std::string& category,
                           const std::string& message) {
  JsonWriter w;
  w.begin_object();
  write_header(w, command);
  w.key("error").value(message);
  w.key("category").value(category);
  w.end_object();
  return w.str();
}

// --- CSV ---------------------------------------------------------------------

void write_matrix_csv(std::ostream& os, const Matrix<double>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

void write_samples_csv(std::ostream& os, const SampleSet<double>& s) {
  for (Index j = 0; j < s.x.cols(); ++j) {
    if (j > 0) os << ',';
    os << 'v' << (j + 1);
  }
  os << '\n';
  write_matrix_csv(os, s.x);
}

}  // namespace fsk
