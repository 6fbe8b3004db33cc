#pragma once

#include "clmeasure/qexact.hpp"
#include "clmeasure/partition.hpp"
#include "clmeasure/decomp.hpp"
#include "clmeasure/partmod.hpp"
#include "clmeasure/measure.hpp"
#include "clmeasure/moments.hpp"
#include "clmeasure/nongalois.hpp"
#include "clmeasure/spmodel.hpp"
#include "clmeasure/render.hpp"
#include "clmeasure/oracle.hpp"
#include "clmeasure/verify.hpp"
