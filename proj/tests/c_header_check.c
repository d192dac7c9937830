/* Copyright 2026 The nondipole-tdse Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include "ndtdse/ndtdse.h"

int ndt_c_header_check(void) {
  ndt_config* c = 0;
  ndt_run_options o;
  ndt_run_options_init(&o);
  return (int)ndt_config_parse("model = 1\n", &c);
}
