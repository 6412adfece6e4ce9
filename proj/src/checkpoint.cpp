#include "l2g/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace l2g {

namespace {

constexpr const char* kMagic = "l2g-checkpoint 1";

void put_matrix(std::ostringstream& os, const Eigen::MatrixXd& m) {
  os << m.rows() << ' ' << m.cols();
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " %a", m(i, j));
      os << buf;
    }
  }
  os << '\n';
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::Io, "malformed checkpoint: " + what); }

Eigen::MatrixXd get_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) corrupt("matrix shape");
  Eigen::MatrixXd m(rows, cols);
  std::string tok;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(is >> tok)) corrupt("matrix values");
      char* end = nullptr;
      m(i, j) = std::strtod(tok.c_str(), &end);
      if (*end != '\0') corrupt("value '" + tok + "'");
    }
  }
  return m;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) corrupt("expected '" + word + "'");
}

}  // namespace

std::string checkpoint_text(const RunConfig& cfg, const Model& model, const TrainState& state) {
  const std::string config = config_text(cfg);
  std::ostringstream os;
  os << kMagic << '\n';
  os << "config_hash " << hex64(fnv1a(config)) << '\n';
  os << "step " << state.step << '\n';
  std::size_t lines = 0;
  for (char c : config) lines += c == '\n';
  os << "config " << lines << '\n' << config;
  const auto& params = model.params();
  os << "params " << params.size() << '\n';
  for (const auto& p : params) {
    os << p.name << ' ';
    put_matrix(os, p.value);
  }
  const auto& opt = state.optimizer;
  os << "optimizer_step " << opt.step << '\n';
  os << "first " << opt.first.size() << '\n';
  for (const auto& m : opt.first) put_matrix(os, m);
  os << "second " << opt.second.size() << '\n';
  for (const auto& m : opt.second) put_matrix(os, m);
  return os.str();
}

void save_checkpoint(const std::string& path, const RunConfig& cfg, const Model& model, const TrainState& state) {
  write_file(path, checkpoint_text(cfg, model, state));
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kMagic) corrupt("bad header");
  std::string hash;
  expect(is, "config_hash");
  is >> hash;
  TrainState state;
  expect(is, "step");
  is >> state.step;
  std::size_t lines = 0;
  expect(is, "config");
  is >> lines;
  std::getline(is, line);
  std::string config;
  for (std::size_t i = 0; i < lines; ++i) {
    if (!std::getline(is, line)) corrupt("truncated config");
    config += line + '\n';
  }
  if (hex64(fnv1a(config)) != hash) corrupt("config hash mismatch");
  const RunConfig cfg = parse_run_config(config);
  Model model(cfg.model);

  int count = 0;
  expect(is, "params");
  is >> count;
  if (count != model.params().size()) corrupt("parameter count");
  for (int i = 0; i < count; ++i) {
    std::string name;
    is >> name;
    auto& p = model.params()[i];
    if (name != p.name) corrupt("unexpected parameter " + name);
    Eigen::MatrixXd m = get_matrix(is);
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) corrupt("shape of " + name);
    p.value = std::move(m);
  }
  expect(is, "optimizer_step");
  is >> state.optimizer.step;
  std::size_t n = 0;
  expect(is, "first");
  is >> n;
  for (std::size_t i = 0; i < n; ++i) state.optimizer.first.push_back(get_matrix(is));
  expect(is, "second");
  is >> n;
  for (std::size_t i = 0; i < n; ++i) state.optimizer.second.push_back(get_matrix(is));
  if (!is) corrupt("truncated");
  return {cfg, std::move(model), std::move(state)};
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

}  // namespace l2g
