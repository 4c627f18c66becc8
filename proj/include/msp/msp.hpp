#pragma once

#include <msp/config.hpp>
#include <msp/coupler.hpp>
#include <msp/current.hpp>
#include <msp/diagnostics.hpp>
#include <msp/fields.hpp>
#include <msp/helmholtz.hpp>
#include <msp/initial_data.hpp>
#include <msp/klein_gordon.hpp>
#include <msp/scenario.hpp>
#include <msp/schrodinger.hpp>
#include <msp/snapshot.hpp>
#include <msp/spectral.hpp>
#include <msp/verify.hpp>
