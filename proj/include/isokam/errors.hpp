#pragma once

#include <stdexcept>
#include <string>

namespace isokam {

// Base class for every domain error. name() is the stable identifier printed
// by the CLI and matched in tests.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define ISOKAM_SIMPLE_ERROR(Name)                                        \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

ISOKAM_SIMPLE_ERROR(SingularInput)
ISOKAM_SIMPLE_ERROR(LogUndefined)
ISOKAM_SIMPLE_ERROR(BudgetExceeded)
ISOKAM_SIMPLE_ERROR(NetTooCoarse)
ISOKAM_SIMPLE_ERROR(DimUnsupported)
ISOKAM_SIMPLE_ERROR(AntipodalPoints)
ISOKAM_SIMPLE_ERROR(NumericalBlowup)
ISOKAM_SIMPLE_ERROR(RankDeficient)
ISOKAM_SIMPLE_ERROR(TooFarFromIsometry)

#undef ISOKAM_SIMPLE_ERROR

class NotDenseAtBudget : public Error {
 public:
  NotDenseAtBudget(double radius, int length)
      : Error("NotDenseAtBudget", "covering radius " + std::to_string(radius) +
                                      " at word length " + std::to_string(length)),
        radius_(radius),
        length_(length) {}
  double radius() const noexcept { return radius_; }
  int length() const noexcept { return length_; }

 private:
  double radius_;
  int length_;
};

class NotDiophantineAtDegree : public Error {
 public:
  explicit NotDiophantineAtDegree(int degree)
      : Error("NotDiophantineAtDegree",
              "I - M is singular at degree " + std::to_string(degree)),
        degree_(degree) {}
  int degree() const noexcept { return degree_; }

 private:
  int degree_;
};

class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string field, const std::string& what)
      : Error("ConfigInvalid", field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace isokam
