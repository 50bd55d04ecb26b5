#include "earpipe/models/model_io.hpp"

#include "earpipe/container.hpp"
#include "earpipe/error.hpp"

namespace earpipe::models {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Svm: return "svm";
    case ModelKind::Knn: return "knn";
    case ModelKind::Rfc: return "rfc";
    case ModelKind::Cnn: return "cnn";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::Svm, ModelKind::Knn, ModelKind::Rfc, ModelKind::Cnn}) {
    if (to_string(k) == name) return k;
  }
  throw_parameter("unknown model kind '" + std::string(name) + "' (expected svm, knn, rfc or cnn)");
}

ModelKind kind_of(const AnyModel& model) {
  return static_cast<ModelKind>(model.index());
}

json to_json(const NormalizationParams& p) {
  std::vector<int> pass(p.passthrough.begin(), p.passthrough.end());
  return {{"kind", to_string(p.kind)}, {"offset", p.offset}, {"scale", p.scale},
          {"passthrough", pass}, {"fitted_on", p.fitted_on}};
}

NormalizationParams normalization_from_json(const json& j) {
  NormalizationParams p;
  p.kind = parse_normalization(j.at("kind").get<std::string>());
  p.offset = j.at("offset").get<std::vector<double>>();
  p.scale = j.at("scale").get<std::vector<double>>();
  for (int v : j.at("passthrough").get<std::vector<int>>()) p.passthrough.push_back(v != 0);
  p.fitted_on = j.value("fitted_on", std::string{});
  if (p.scale.size() != p.offset.size() || p.passthrough.size() != p.offset.size()) {
    throw_parse("normalizer: offset, scale and passthrough lengths differ");
  }
  return p;
}

namespace {

void put_matrix_rowwise(std::vector<double>& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<double>& p) : p_(p) {}
  double next() {
    if (at_ >= p_.size()) throw_parse("model: payload shorter than its header declares");
    return p_[at_++];
  }
  Eigen::MatrixXd rows(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = next();
    }
    return m;
  }
  Eigen::MatrixXd colmajor(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = next();
    return m;
  }
  void finish() const {
    if (at_ != p_.size()) throw_parse("model: payload longer than its header declares");
  }

 private:
  const std::vector<double>& p_;
  std::size_t at_ = 0;
};

json arch_json(const CnnArch& a) {
  return {{"in_channels", a.in_channels}, {"in_length", a.in_length}, {"filters", a.filters},
          {"kernel", a.kernel}, {"hidden", a.hidden}, {"n_classes", a.n_classes},
          {"dropout", a.dropout}};
}

CnnArch arch_from_json(const json& j) {
  CnnArch a;
  a.in_channels = j.at("in_channels").get<int>();
  a.in_length = j.at("in_length").get<int>();
  a.filters = j.at("filters").get<std::array<int, 3>>();
  a.kernel = j.at("kernel").get<int>();
  a.hidden = j.at("hidden").get<std::array<int, 3>>();
  a.n_classes = j.at("n_classes").get<int>();
  a.dropout = j.at("dropout").get<double>();
  return a;
}

}  // namespace

void save_model(const StoredModel& stored, const std::filesystem::path& path) {
  json h;
  h["format"] = "earpipe.model";
  h["version"] = 1;
  h["kind"] = to_string(kind_of(stored.model));
  h["provenance"] = stored.provenance;
  if (stored.normalizer) h["normalizer"] = to_json(*stored.normalizer);
  std::vector<double> payload;

  if (const auto* m = std::get_if<SvmModel>(&stored.model)) {
    h["gamma"] = m->gamma;
    h["C"] = m->C;
    h["bias"] = m->bias;
    h["n_support"] = m->support.rows();
    h["dim"] = m->support.cols();
    h["iterations"] = m->iterations;
    h["converged"] = m->converged;
    put_matrix_rowwise(payload, m->support);
    payload.insert(payload.end(), m->coef.begin(), m->coef.end());
  } else if (const auto* m = std::get_if<KnnModel>(&stored.model)) {
    h["k"] = m->k;
    h["n"] = m->X.rows();
    h["dim"] = m->X.cols();
    put_matrix_rowwise(payload, m->X);
    for (int c : m->classes) payload.push_back(c);
  } else if (const auto* m = std::get_if<ForestModel>(&stored.model)) {
    h["n_features"] = m->n_features;
    std::vector<std::size_t> sizes;
    for (const auto& t : m->trees) {
      sizes.push_back(t.nodes.size());
      for (const auto& n : t.nodes) {
        payload.insert(payload.end(), {static_cast<double>(n.feature), n.threshold,
                                       static_cast<double>(n.left), static_cast<double>(n.right),
                                       static_cast<double>(n.label)});
      }
    }
    h["tree_sizes"] = sizes;
  } else if (const auto* m = std::get_if<Cnn1d>(&stored.model)) {
    h["arch"] = arch_json(m->arch);
    for (const auto& p : m->params) payload.insert(payload.end(), p.data(), p.data() + p.size());
  }
  container::write(path, h, payload);
}

StoredModel load_model(const std::filesystem::path& path) {
  const auto c = container::read(path);
  const auto& h = c.header;
  try {
    if (h.value("format", std::string{}) != "earpipe.model") throw_parse("load_model: not a model file");
    StoredModel out;
    out.provenance = h.value("provenance", json::object());
    if (h.contains("normalizer")) out.normalizer = normalization_from_json(h.at("normalizer"));
    Reader r(c.payload);
    switch (parse_model_kind(h.at("kind").get<std::string>())) {
      case ModelKind::Svm: {
        SvmModel m;
        m.gamma = h.at("gamma").get<double>();
        m.C = h.at("C").get<double>();
        m.bias = h.at("bias").get<double>();
        m.iterations = h.value("iterations", 0L);
        m.converged = h.value("converged", true);
        const auto n = h.at("n_support").get<Eigen::Index>();
        m.support = r.rows(n, h.at("dim").get<Eigen::Index>());
        for (Eigen::Index i = 0; i < n; ++i) m.coef.push_back(r.next());
        out.model = std::move(m);
        break;
      }
      case ModelKind::Knn: {
        KnnModel m;
        m.k = h.at("k").get<int>();
        const auto n = h.at("n").get<Eigen::Index>();
        m.X = r.rows(n, h.at("dim").get<Eigen::Index>());
        for (Eigen::Index i = 0; i < n; ++i) m.classes.push_back(static_cast<int>(r.next()));
        out.model = std::move(m);
        break;
      }
      case ModelKind::Rfc: {
        ForestModel m;
        m.n_features = h.at("n_features").get<std::size_t>();
        for (auto size : h.at("tree_sizes").get<std::vector<std::size_t>>()) {
          DecisionTree t;
          for (std::size_t i = 0; i < size; ++i) {
            TreeNode n;
            n.feature = static_cast<int>(r.next());
            n.threshold = r.next();
            n.left = static_cast<int>(r.next());
            n.right = static_cast<int>(r.next());
            n.label = static_cast<int>(r.next());
            const auto limit = static_cast<int>(size);
            if (n.feature >= 0 && (n.feature >= static_cast<int>(m.n_features) || n.left <= 0 ||
                                   n.left >= limit || n.right <= 0 || n.right >= limit)) {
              throw_parse("load_model: tree node " + std::to_string(i) + " is out of range");
            }
            t.nodes.push_back(n);
          }
          m.trees.push_back(std::move(t));
        }
        out.model = std::move(m);
        break;
      }
      case ModelKind::Cnn: {
        auto m = cnn_init(arch_from_json(h.at("arch")), 0);
        for (auto& p : m.params) p = r.colmajor(p.rows(), p.cols());
        out.model = std::move(m);
        break;
      }
    }
    r.finish();
    return out;
  } catch (const json::exception& e) {
    throw_parse("load_model: malformed header: " + std::string(e.what()));
  }
}

}  // namespace earpipe::models
