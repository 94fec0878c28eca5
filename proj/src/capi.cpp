#include "crossrank.h"

#include <cstring>
#include <memory>
#include <string>

#include "config.hpp"
#include "runner.hpp"
#include "status.hpp"

using crossrank::Error;
using crossrank::PipelineRunner;
using crossrank::Status;

struct crossrank_pipeline {
  std::unique_ptr<PipelineRunner> runner;
  std::string last_error;
};

namespace {

crossrank_status to_c_status(Status status) {
  return static_cast<crossrank_status>(static_cast<int>(status));
}

template <class Fn>
crossrank_status guarded(crossrank_pipeline* pipeline, Fn&& fn) {
  if (!pipeline) return CROSSRANK_ERR_INVALID_ARGUMENT;
  pipeline->last_error.clear();
  try {
    fn();
    return CROSSRANK_OK;
  } catch (const Error& e) {
    pipeline->last_error = e.what();
    return to_c_status(e.status());
  } catch (const std::exception& e) {
    pipeline->last_error = e.what();
    return CROSSRANK_ERR_INTERNAL;
  } catch (...) {
    pipeline->last_error = "unknown error";
    return CROSSRANK_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* crossrank_version(void) { return "1.0.0"; }

const char* crossrank_status_name(crossrank_status status) {
  return crossrank::status_name(static_cast<Status>(static_cast<int>(status)));
}

crossrank_status crossrank_pipeline_open(const char* config_path,
                                         crossrank_pipeline** out) {
  if (!config_path || !out) return CROSSRANK_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  auto handle = std::make_unique<crossrank_pipeline>();
  try {
    handle->runner = std::make_unique<PipelineRunner>(
        crossrank::load_config(config_path));
  } catch (const Error& e) {
    return to_c_status(e.status());
  } catch (const std::exception&) {
    return CROSSRANK_ERR_INTERNAL;
  }
  *out = handle.release();
  return CROSSRANK_OK;
}

void crossrank_pipeline_close(crossrank_pipeline* pipeline) { delete pipeline; }

const char* crossrank_pipeline_last_error(const crossrank_pipeline* pipeline) {
  return pipeline ? pipeline->last_error.c_str() : "";
}

crossrank_status crossrank_pipeline_set_jobs(crossrank_pipeline* pipeline,
                                             int32_t jobs) {
  return guarded(pipeline, [&] { pipeline->runner->set_jobs(jobs); });
}

crossrank_status crossrank_pipeline_set_seed(crossrank_pipeline* pipeline,
                                             uint64_t seed) {
  return guarded(pipeline, [&] { pipeline->runner->set_seed_override(seed); });
}

crossrank_status crossrank_pipeline_set_combo_filter(
    crossrank_pipeline* pipeline, const char* expr) {
  if (!expr) return CROSSRANK_ERR_INVALID_ARGUMENT;
  return guarded(pipeline, [&] { pipeline->runner->set_combo_filter(expr); });
}

crossrank_status crossrank_pipeline_set_cache_dir(crossrank_pipeline* pipeline,
                                                  const char* dir) {
  if (!dir) return CROSSRANK_ERR_INVALID_ARGUMENT;
  return guarded(pipeline, [&] { pipeline->runner->set_cache_dir(dir); });
}

crossrank_status crossrank_pipeline_synth(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_synth(); });
}

crossrank_status crossrank_pipeline_prepare(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_prepare(); });
}

crossrank_status crossrank_pipeline_stage1(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_stage1(); });
}

crossrank_status crossrank_pipeline_stage2(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_stage2(); });
}

crossrank_status crossrank_pipeline_stage3(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_stage3(); });
}

crossrank_status crossrank_pipeline_submit(crossrank_pipeline* pipeline) {
  return guarded(pipeline, [&] { pipeline->runner->run_submit(); });
}

crossrank_status crossrank_pipeline_evaluate(crossrank_pipeline* pipeline,
                                             char** report_text) {
  if (!report_text) return CROSSRANK_ERR_INVALID_ARGUMENT;
  *report_text = nullptr;
  return guarded(pipeline, [&] {
    const std::string text = pipeline->runner->run_evaluate();
    char* owned = static_cast<char*>(std::malloc(text.size() + 1));
    if (!owned) crossrank::fail(Status::Internal, "out of memory");
    std::memcpy(owned, text.c_str(), text.size() + 1);
    *report_text = owned;
  });
}

void crossrank_string_free(char* text) { std::free(text); }

}  // extern "C"
