// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
