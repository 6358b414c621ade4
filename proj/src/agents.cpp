#include "cap/agents.hpp"

#include <stdexcept>

namespace cap {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::OBL: return "OBL";
    case Strategy::CA_MA: return "CA_MA";
    case Strategy::SA: return "SA";
    case Strategy::ORA: return "ORA";
    case Strategy::NU: return "NU";
    case Strategy::MIN: return "MIN";
  }
  throw std::logic_error("unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "OBL") return Strategy::OBL;
  if (name == "CA_MA" || name == "CA" || name == "MA") return Strategy::CA_MA;
  if (name == "SA") return Strategy::SA;
  if (name == "ORA") return Strategy::ORA;
  if (name == "NU") return Strategy::NU;
  if (name == "MIN") return Strategy::MIN;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

}  // namespace cap
