#pragma once

#include <stdexcept>
#include <string>

namespace npe {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorClass { config, numeric, validation, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define NPE_DEFINE_ERROR(Name, Class)                                                  \
  class Name : public Error {                                                          \
   public:                                                                             \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, #Name ": " + what) {} \
  };

NPE_DEFINE_ERROR(ConfigError, config)
NPE_DEFINE_ERROR(NotRegistered, config)
NPE_DEFINE_ERROR(InvalidSampleSize, config)
NPE_DEFINE_ERROR(ShapeError, config)
NPE_DEFINE_ERROR(NoOracle, config)
NPE_DEFINE_ERROR(DomainError, numeric)
NPE_DEFINE_ERROR(PreprocessError, numeric)
NPE_DEFINE_ERROR(CholeskyError, numeric)
NPE_DEFINE_ERROR(IntegrationError, numeric)
NPE_DEFINE_ERROR(StationarityError, numeric)
NPE_DEFINE_ERROR(NumericsError, numeric)
NPE_DEFINE_ERROR(SamplingDiverged, numeric)
NPE_DEFINE_ERROR(ValidationError, validation)
NPE_DEFINE_ERROR(EmptyReport, validation)
NPE_DEFINE_ERROR(CorruptCheckpoint, io)
NPE_DEFINE_ERROR(IoError, io)

#undef NPE_DEFINE_ERROR

}  // namespace npe
