#include "modecert/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace modecert {

namespace {

double to_double(const std::string& text, const std::string& where) {
  const auto first = text.find_first_not_of(" \t");
  const auto last = text.find_last_not_of(" \t");
  if (first == std::string::npos) throw ConfigError(where + ": empty value");
  double value = 0.0;
  const char* begin = text.data() + first;
  const char* end = text.data() + last + 1;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": not a number: " + text);
  return value;
}

std::vector<double> to_list(const std::string& text, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

CertifierSettings parse_settings(std::istream& in, const std::string& source) {
  // The INI reader only knows whole-line ';' comments; drop '#' and
  // trailing comments here.
  std::stringstream filtered;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto c = line.find_first_of(";#"); c != std::string::npos) line.resize(c);
    filtered << line << '\n';
  }

  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(filtered, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  CertifierSettings s;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError(source + ": sections are not supported ([" + key + "])");
    const std::string where = source + ": " + key;
    const std::string& value = node.data();
    if (key == "epsilon") s.epsilon = to_double(value, where);
    else if (key == "alpha_pw") s.alpha_pw = to_double(value, where);
    else if (key == "alpha_r") s.alpha_r = to_double(value, where);
    else if (key == "alpha_u") s.alpha_u = to_double(value, where);
    else if (key == "pairwise_delta0") s.pairwise_delta0 = to_double(value, where);
    else if (key == "pairwise_grid") s.pairwise_grid = to_list(value, where);
    else if (key == "pairwise_weights") s.pairwise_weights = to_list(value, where);
    else if (key == "lcb_grid") s.lcb_grid = to_list(value, where);
    else if (key == "lcb_weights") s.lcb_weights = to_list(value, where);
    else throw ConfigError(source + ": unknown key '" + key + "'");
  }
  const int alphas = s.alpha_pw.has_value() + s.alpha_r.has_value() + s.alpha_u.has_value();
  if (alphas != 0 && alphas != 3) throw ConfigError(source + ": alpha_pw, alpha_r and alpha_u must be given together");
  if (!s.pairwise_weights.empty() && s.pairwise_grid.empty()) throw ConfigError(source + ": pairwise_weights without pairwise_grid");
  if (!s.lcb_weights.empty() && s.lcb_grid.empty()) throw ConfigError(source + ": lcb_weights without lcb_grid");
  return s;
}

CertifierSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  return parse_settings(in, path.string());
}

void apply_settings(const CertifierSettings& s, CertifierConfig& config) {
  try {
    const double eps = s.epsilon.value_or(config.budget.epsilon());
    if (s.alpha_pw) {
      config.budget = BudgetSplit(eps, *s.alpha_pw, *s.alpha_r, *s.alpha_u);
    } else if (s.epsilon) {
      config.budget = BudgetSplit(eps);
    }
    if (!s.pairwise_grid.empty()) {
      config.pairwise_grid = GridSpec::pairwise(
          s.pairwise_grid,
          s.pairwise_weights.empty() ? uniform_weights(s.pairwise_grid.size()) : s.pairwise_weights);
    } else if (s.pairwise_delta0) {
      config.pairwise_grid = geometric_pairwise_grid(*s.pairwise_delta0);
    }
    if (!s.lcb_grid.empty()) {
      config.lcb_grid = GridSpec::lcb(
          s.lcb_grid, s.lcb_weights.empty() ? uniform_weights(s.lcb_grid.size()) : s.lcb_weights);
    }
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace modecert
