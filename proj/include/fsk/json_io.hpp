#pragma once
// JSON and CSV input/output for the double-precision instantiation of the
// library. Parsing goes through nlohmann::json with strict schema checks;
// output goes through a small deterministic writer that serializes every
// double with 17 significant digits, so identical inputs always produce
// byte-identical documents and all values round-trip exactly.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsk/model.hpp"
#include "fsk/predictors.hpp"
#include "fsk/simulate.hpp"
#include "fsk/transform.hpp"

namespace fsk {

inline constexpr int kSchemaVersion = 1;

// Deterministic JSON writer: object members one per line, arrays inline,
// doubles at 17 significant digits. Keys are emitted in call order.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(long long v);
  JsonWriter& value(int v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v);
  JsonWriter& null_value();
  JsonWriter& value(const Matrix<double>& m);  // array of row arrays
  JsonWriter& value(const Vector<double>& v);

  std::string str() const;

 private:
  void prefix_value();
  void write_indent();

  struct Frame {
    bool is_object;
    int count = 0;
  };
  std::vector<Frame> stack_;
  bool pending_key_ = false;
  std::string out_;
};

// %.17g rendering of a finite double; throws NumericalIntegrity on NaN/inf.
std::string format_double(double v);

// --- model files ---------------------------------------------------------

// Parses the model schema {"p", "q", "lambda", "phi", "psi2"} with strict
// shape checking. Schema violations throw ParseError; an asymmetric phi is
// a semantic defect and throws InvalidModel.
FactorModeld parse_model_json(const std::string& text);
FactorModeld load_model_file(const std::string& path);
std::string model_to_json(const FactorModeld& m);

// --- CLI documents -------------------------------------------------------

std::string document_validate(const std::optional<ModelDiagnostics<double>>& d,
                              const std::string& error);

std::string document_transform(const TransformedModel<double>& tm,
                               double eq13_offdiag_residual,
                               double eq13_diag_residual,
                               double sigma_preservation_residual);

std::string document_pipeline(const PipelineReport<double>& r, Index p);

struct PredictorDoc {
  Matrix<double> weights;
  Matrix<double> covariance;
  Vector<double> validity;
};

struct PredictorsDocument {
  Index p = 0;
  Index q = 0;
  PredictorDoc bl, blcu, dblcp;
  Matrix<double> r_blcu_bl, r_dblcp_bl, r_blcu_dblcp;
};

std::string document_predictors(const PredictorsDocument& doc);

struct VerifyDocument {
  double phi_identity_residual = 0;
  double gram_offdiag_residual = 0;
  bool precondition_met = false;
  double max_deviation_from_identity = 0;
  Matrix<double> r_blcu_bl, r_dblcp_bl, r_blcu_dblcp;
  std::string status;  // "ok" | "precondition_not_met" | "deviation_exceeds_tol"
};

std::string document_verify(const VerifyDocument& doc);

struct SimulatePair {
  std::string a, b;
  Matrix<double> empirical;
  Matrix<double> closed_form;
  double max_abs_diff = 0;
};

struct SimulateValidity {
  std::string kind;
  Vector<double> empirical;
  Vector<double> closed_form;
  double max_abs_diff = 0;
};

struct SimulateDocument {
  long long n = 0;
  long long seed = 0;
  std::vector<SimulatePair> pairs;
  std::vector<SimulateValidity> validities;
  double max_abs_discrepancy = 0;
};

std::string document_simulate(const SimulateDocument& doc);

std::string document_error(const std::string& command,
                           const std::string& category,
                           const std::string& message);

// --- CSV -----------------------------------------------------------------

void write_matrix_csv(std::ostream& os, const Matrix<double>& m);
void write_samples_csv(std::ostream& os, const SampleSet<double>& s);

}  // namespace fsk
