#ifndef EKMID_PIPELINE_HPP
#define EKMID_PIPELINE_HPP

#include <string>
#include <vector>

#include "config.hpp"
#include "ekm.hpp"
#include "evalmetrics.hpp"
#include "nn.hpp"
#include "wfdb.hpp"

namespace ekmid::pipeline {

// Keys understood by the commands (flat key=value, CLI flags override):
//   db=wfdb|plaintext|synthetic  in=<dir>  out=<dir>  channel=<i>
//   bpf  alpha_i  alpha_e  cap  train_frac  val_frac  raster_h  raster_w
//   pathology=<comma list>  fs  subjects  duration  seed  threads
//   dataset  epochs  batch  lr  steps_per_epoch  model  history  report  grid

std::vector<wfdb::EcgRecord> collect_records(const config::RunConfig& cfg);

ekm::DatasetManifest cmd_build(const config::RunConfig& cfg);

nn::TrainHistory cmd_train(const config::RunConfig& cfg);

eval::ReportRow cmd_eval(const config::RunConfig& cfg);

std::vector<eval::ReportRow> cmd_reproduce(const config::RunConfig& cfg);

}  // namespace ekmid::pipeline

#endif
